//! Differentiable convex terms with Lipschitz gradients.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{matrix_from_rows, Matrix, Vector};
use crate::prox::{ProxFn, ProxSpec, Quadratic};

type ValueMap = Arc<dyn Fn(&Vector) -> Result<f64> + Send + Sync>;
type GradMap = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;

/// A convex function with a `lipschitz`-Lipschitz gradient.
#[derive(Clone)]
pub struct SmoothTerm {
    dim: Option<usize>,
    value: ValueMap,
    gradient: GradMap,
    lipschitz: f64,
    label: String,
}

impl fmt::Debug for SmoothTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothTerm")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl SmoothTerm {
    pub fn new<V, G>(
        label: impl Into<String>,
        dim: Option<usize>,
        lipschitz: f64,
        value: V,
        gradient: G,
    ) -> Result<Self>
    where
        V: Fn(&Vector) -> Result<f64> + Send + Sync + 'static,
        G: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::param("lipschitz", format!("must be >= 0, got {lipschitz}")));
        }
        Ok(SmoothTerm {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            lipschitz,
            label: label.into(),
        })
    }

    pub fn zero(dim: Option<usize>) -> Self {
        SmoothTerm {
            dim,
            value: Arc::new(|_| Ok(0.0)),
            gradient: Arc::new(|x| Ok(x * 0.0)),
            lipschitz: 0.0,
            label: "zero".into(),
        }
    }

    /// `½⟨Qx, x⟩ + ⟨b, x⟩ + c`.
    pub fn quadratic(q: &Quadratic, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::NonFinite("c"));
        }
        let lipschitz = q
            .q()
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |a, b| a.max(*b));
        let (a, b) = (q.clone(), q.clone());
        SmoothTerm::new(
            "quadratic",
            Some(q.dim()),
            lipschitz,
            move |x| Ok(a.value(x) + c),
            move |x| Ok(b.gradient(x)),
        )
    }

    /// Moreau envelope `f□(‖·‖²/(2γ))`, whose gradient is `(Id − prox_{γf})/γ`.
    pub fn envelope(f: &ProxFn, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::param("gamma", format!("must be > 0, got {gamma}")));
        }
        if !f.has_value() {
            return Err(Error::Unsupported(format!(
                "envelope of `{}` needs a value oracle",
                f.label()
            )));
        }
        let (a, b) = (f.clone(), f.clone());
        SmoothTerm::new(
            format!("envelope({})", f.label()),
            f.dim(),
            1.0 / gamma,
            move |x| a.envelope(gamma, x),
            move |x| Ok((x - b.prox(gamma, x)?) / gamma),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// A zero Lipschitz constant means the gradient is constant.
    pub fn is_affine(&self) -> bool {
        self.lipschitz == 0.0
    }

    fn check_input(&self, x: &Vector) -> Result<()> {
        if let Some(d) = self.dim {
            check_dim(d, x.len())?;
        }
        Ok(())
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        self.check_input(x)?;
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        self.check_input(x)?;
        (self.gradient)(x)
    }
}

/// Grammar of smooth terms in problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothSpec {
    Zero {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Quadratic {
        q: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
        #[serde(default)]
        c: f64,
    },
    Envelope { prox: ProxSpec, gamma: f64 },
}

impl SmoothSpec {
    pub fn build(&self) -> Result<SmoothTerm> {
        match self {
            SmoothSpec::Zero { dim } => Ok(SmoothTerm::zero(*dim)),
            SmoothSpec::Quadratic { q, b, c } => {
                let q: Matrix = matrix_from_rows(q)?;
                let b = b.as_ref().map(|b| Vector::from_column_slice(b));
                SmoothTerm::quadratic(&Quadratic::new(q, b)?, *c)
            }
            SmoothSpec::Envelope { prox, gamma } => SmoothTerm::envelope(&prox.build()?, *gamma),
        }
    }
}
