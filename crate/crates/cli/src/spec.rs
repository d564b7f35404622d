//! Problem files: a versioned JSON document holding one of a solver run, a
//! sampled check, or a single proximity operator.

use std::sync::Arc;

use proxkit::linalg::{matrix_from_rows, LinOp, Vector};
use proxkit::monotone::SaddleProblemSpec;
use proxkit::{MonotoneSpec, ProxSpec, SetSpec, SmoothSpec, SolverConfig};
use serde::{Deserialize, Serialize};

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub version: u32,
    /// Dimension of the primal space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<Problem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<Predicate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prox: Option<ProxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Output>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    Ppa {
        a: MonotoneSpec,
    },
    ForwardBackward {
        a: MonotoneSpec,
        b: MonotoneSpec,
        /// `B` is `1/beta`-cocoercive.
        beta: f64,
    },
    Fbf {
        a: MonotoneSpec,
        b: MonotoneSpec,
    },
    DouglasRachford {
        a: MonotoneSpec,
        b: MonotoneSpec,
        gamma: f64,
    },
    ParallelProjection {
        sets: Vec<SetSpec>,
        weights: Vec<f64>,
    },
    PartialInverse {
        f: ProxSpec,
        subspace: SetSpec,
    },
    PdComposite {
        saddle: SaddleProblemSpec,
    },
    PdLagrangian {
        f: ProxSpec,
        g: ProxSpec,
        l: Vec<Vec<f64>>,
    },
    PdChen {
        f: ProxSpec,
        g: ProxSpec,
        l: Vec<Vec<f64>>,
    },
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Ppa { .. } => "ppa",
            Problem::ForwardBackward { .. } => "forward_backward",
            Problem::Fbf { .. } => "fbf",
            Problem::DouglasRachford { .. } => "douglas_rachford",
            Problem::ParallelProjection { .. } => "parallel_projection",
            Problem::PartialInverse { .. } => "partial_inverse",
            Problem::PdComposite { .. } => "pd_composite",
            Problem::PdLagrangian { .. } => "pd_lagrangian",
            Problem::PdChen { .. } => "pd_chen",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            samples: 10_000,
            radius: 10.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "predicate", rename_all = "snake_case", deny_unknown_fields)]
pub enum Predicate {
    FirmNonexpansive {
        operator: Operand,
    },
    Cyclic {
        operator: Operand,
        #[serde(default = "default_cycle")]
        max_cycle: usize,
    },
    Identity {
        left: Operand,
        right: Operand,
        #[serde(default = "default_identity_tol")]
        tol: f64,
    },
    Gradient {
        smooth: SmoothSpec,
    },
}

fn default_cycle() -> usize {
    16
}

fn default_identity_tol() -> f64 {
    1e-10
}

fn one() -> f64 {
    1.0
}

/// Vector maps assembled from operators in the library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operand {
    Identity,
    /// `prox_{γf}`
    Prox {
        prox: ProxSpec,
        #[serde(default = "one")]
        gamma: f64,
    },
    /// `J_{γA}`
    Resolvent {
        monotone: MonotoneSpec,
        #[serde(default = "one")]
        gamma: f64,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    Scale {
        by: f64,
        of: Box<Operand>,
    },
    Sum {
        terms: Vec<Operand>,
    },
    /// `outer ∘ inner`
    Compose {
        outer: Box<Operand>,
        inner: Box<Operand>,
    },
}

pub type VectorMap = Arc<dyn Fn(&Vector) -> proxkit::Result<Vector> + Send + Sync>;

impl Operand {
    pub fn build(&self) -> proxkit::Result<VectorMap> {
        Ok(match self {
            Operand::Identity => Arc::new(|x: &Vector| Ok(x.clone())),
            Operand::Prox { prox, gamma } => {
                let (f, g) = (prox.build()?, *gamma);
                Arc::new(move |x: &Vector| f.prox(g, x))
            }
            Operand::Resolvent { monotone, gamma } => {
                let (a, g) = (monotone.build()?, *gamma);
                Arc::new(move |x: &Vector| a.resolvent(g, x))
            }
            Operand::Linear { matrix } => {
                let l = LinOp::dense(matrix_from_rows(matrix)?);
                Arc::new(move |x: &Vector| l.forward(x))
            }
            Operand::Scale { by, of } => {
                let (t, c) = (of.build()?, *by);
                Arc::new(move |x: &Vector| Ok(t(x)? * c))
            }
            Operand::Sum { terms } => {
                let maps = terms.iter().map(Operand::build).collect::<proxkit::Result<Vec<_>>>()?;
                Arc::new(move |x: &Vector| {
                    let mut acc = Vector::zeros(x.len());
                    for t in &maps {
                        let y = t(x)?;
                        if y.len() != acc.len() {
                            return Err(proxkit::Error::DimensionMismatch {
                                expected: acc.len(),
                                found: y.len(),
                            });
                        }
                        acc += y;
                    }
                    Ok(acc)
                })
            }
            Operand::Compose { outer, inner } => {
                let (a, b) = (outer.build()?, inner.build()?);
                Arc::new(move |x: &Vector| a(&b(x)?))
            }
        })
    }
}
