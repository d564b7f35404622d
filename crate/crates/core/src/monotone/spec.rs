use serde::{Deserialize, Serialize};

use super::{
    inverse_op, make_lagrangian_operator, make_pd_operator, partial_inverse,
    saddle_operator_linear, MonotoneOp, QuadraticLagrangian, SaddleProblemSpec,
};
use crate::error::Result;
use crate::linalg::{matrix_from_rows, vector, LinOp};
use crate::prox::ProxSpec;
use crate::sets::SetSpec;
use crate::smooth::SmoothSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdPart {
    M,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagrangianPart {
    M,
    S,
}

/// Grammar of monotone operators in problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MonotoneSpec {
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    Affine {
        matrix: Vec<Vec<f64>>,
        shift: Vec<f64>,
    },
    SaddleLinear {
        lagrangian: QuadraticLagrangian,
    },
    /// `∂f`
    Prox {
        prox: ProxSpec,
    },
    /// `∇h`
    Gradient {
        smooth: SmoothSpec,
    },
    Inverse {
        of: Box<MonotoneSpec>,
    },
    PartialInverse {
        of: Box<MonotoneSpec>,
        subspace: SetSpec,
    },
    Pd {
        saddle: SaddleProblemSpec,
        part: PdPart,
    },
    Lagrangian {
        f: ProxSpec,
        g: ProxSpec,
        l: Vec<Vec<f64>>,
        part: LagrangianPart,
    },
}

impl MonotoneSpec {
    pub fn build(&self) -> Result<MonotoneOp> {
        match self {
            MonotoneSpec::Linear { matrix } => MonotoneOp::from_linear(matrix_from_rows(matrix)?),
            MonotoneSpec::Affine { matrix, shift } => {
                MonotoneOp::from_affine(matrix_from_rows(matrix)?, vector(shift)?)
            }
            MonotoneSpec::SaddleLinear { lagrangian } => saddle_operator_linear(lagrangian),
            MonotoneSpec::Prox { prox } => Ok(MonotoneOp::from_prox(&prox.build()?)),
            MonotoneSpec::Gradient { smooth } => MonotoneOp::from_gradient(&smooth.build()?),
            MonotoneSpec::Inverse { of } => Ok(inverse_op(&of.build()?)),
            MonotoneSpec::PartialInverse { of, subspace } => {
                partial_inverse(&of.build()?, &subspace.build()?)
            }
            MonotoneSpec::Pd { saddle, part } => {
                let ops = make_pd_operator(&saddle.build()?)?;
                Ok(match part {
                    PdPart::M => ops.m,
                    PdPart::B => ops.b,
                })
            }
            MonotoneSpec::Lagrangian { f, g, l, part } => {
                let ops = make_lagrangian_operator(&f.build()?, &g.build()?, &LinOp::from_rows(l)?)?;
                Ok(match part {
                    LagrangianPart::M => ops.m,
                    LagrangianPart::S => ops.s,
                })
            }
        }
    }
}
