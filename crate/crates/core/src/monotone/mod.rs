//! Maximally monotone operators, represented by their resolvents.

mod saddle;
mod spec;

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, check_gamma, Error, Result};
use crate::linalg::{all_finite, solve, sym_skew_split, Matrix, Vector};
use crate::oracle::{audit_lipschitz, Sampler};
use crate::prox::ProxFn;
use crate::resolvent::{forward_resolvent, rescale_unit_resolvent};
use crate::sets::ConvexSet;
use crate::smooth::SmoothTerm;

pub use saddle::{
    make_lagrangian_operator, make_pd_operator, saddle_operator_linear, LagrangianOperators,
    PdOperators, QuadraticLagrangian, SaddleProblemSpec, SaddleSpec,
};
pub use spec::{LagrangianPart, MonotoneSpec, PdPart};

type ResolventMap = Arc<dyn Fn(f64, &Vector) -> Result<Vector> + Send + Sync>;
type ForwardMap = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;

/// `A` through `(γ, x) ↦ J_{γA}(x)`, plus an optional single-valued forward
/// map with its Lipschitz constant.
#[derive(Clone)]
pub struct MonotoneOp {
    dim: Option<usize>,
    resolvent: ResolventMap,
    forward: Option<ForwardMap>,
    lipschitz: Option<f64>,
    matrix: Option<Arc<Matrix>>,
    label: String,
}

impl fmt::Debug for MonotoneOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneOp")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("forward", &self.forward.is_some())
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

fn spectral_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

impl MonotoneOp {
    pub fn from_resolvent<F>(label: impl Into<String>, dim: Option<usize>, resolvent: F) -> Self
    where
        F: Fn(f64, &Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        MonotoneOp {
            dim,
            resolvent: Arc::new(resolvent),
            forward: None,
            lipschitz: None,
            matrix: None,
            label: label.into(),
        }
    }

    /// `x ↦ Ax`; requires the symmetric part of `A` to be positive semidefinite.
    pub fn from_linear(a: Matrix) -> Result<Self> {
        let n = a.nrows();
        Self::from_affine(a, Vector::zeros(n)).map(|op| op.with_label("linear"))
    }

    /// `x ↦ Ax + b` with `A` monotone.
    pub fn from_affine(a: Matrix, b: Vector) -> Result<Self> {
        let split = sym_skew_split(&a)?;
        if !split.monotone {
            return Err(Error::Precondition(
                "matrix is not monotone: its symmetric part has a negative eigenvalue".into(),
            ));
        }
        let n = a.nrows();
        check_dim(n, b.len())?;
        let lipschitz = spectral_norm(&a);
        let a = Arc::new(a);
        let (ar, br) = (a.clone(), b.clone());
        let (af, bf) = (a.clone(), b);
        Ok(MonotoneOp {
            dim: Some(n),
            resolvent: Arc::new(move |g, x| {
                solve(&(Matrix::identity(n, n) + &*ar * g), &(x - &br * g))
            }),
            forward: Some(Arc::new(move |x| Ok(&*af * x + &bf))),
            lipschitz: Some(lipschitz),
            matrix: Some(a),
            label: "affine".into(),
        })
    }

    /// `∂f`, whose resolvent is `prox_{γf}`.
    pub fn from_prox(f: &ProxFn) -> Self {
        let f2 = f.clone();
        MonotoneOp::from_resolvent(format!("subdiff({})", f.label()), f.dim(), move |g, x| {
            f2.prox(g, x)
        })
    }

    /// A single-valued monotone map known only through forward evaluations;
    /// the resolvent is computed by a damped inner iteration.
    pub fn forward_only<F>(
        label: impl Into<String>,
        dim: Option<usize>,
        lipschitz: f64,
        forward: F,
    ) -> Result<Self>
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::param("lipschitz", format!("must be >= 0, got {lipschitz}")));
        }
        let forward: ForwardMap = Arc::new(forward);
        let fr = forward.clone();
        Ok(MonotoneOp {
            dim,
            resolvent: Arc::new(move |g, x| forward_resolvent(|p| fr(p), lipschitz, g, x)),
            forward: Some(forward),
            lipschitz: Some(lipschitz),
            matrix: None,
            label: label.into(),
        })
    }

    /// `∇h` of a smooth convex term.
    pub fn from_gradient(h: &SmoothTerm) -> Result<Self> {
        let h2 = h.clone();
        MonotoneOp::forward_only(format!("grad({})", h.label()), h.dim(), h.lipschitz(), move |x| {
            h2.gradient(x)
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn has_forward(&self) -> bool {
        self.forward.is_some()
    }

    /// The matrix of a linear or affine operator.
    pub fn matrix(&self) -> Option<&Matrix> {
        self.matrix.as_deref()
    }

    fn check_input(&self, x: &Vector) -> Result<()> {
        if let Some(d) = self.dim {
            check_dim(d, x.len())?;
        }
        Ok(())
    }

    /// `J_{γA}(x) = (Id + γA)⁻¹x`.
    pub fn resolvent(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        self.check_input(x)?;
        let p = (self.resolvent)(gamma, x)?;
        if !all_finite(&p) {
            return Err(Error::NonFinite("resolvent output"));
        }
        Ok(p)
    }

    pub fn forward(&self, x: &Vector) -> Result<Vector> {
        self.check_input(x)?;
        match &self.forward {
            Some(f) => f(x),
            None => Err(Error::Unsupported(format!(
                "`{}` has no single-valued forward map",
                self.label
            ))),
        }
    }

    pub(crate) fn resolvent_map(&self) -> ResolventMap {
        self.resolvent.clone()
    }
}

/// `A⁻¹`, via `J_{γA⁻¹}(x) = x − γ J_{A/γ}(x/γ)`.
pub fn inverse_op(a: &MonotoneOp) -> MonotoneOp {
    let r = a.resolvent_map();
    MonotoneOp::from_resolvent(format!("inverse({})", a.label()), a.dim(), move |g, x| {
        Ok(x - r(1.0 / g, &(x / g))? * g)
    })
}

/// Partial inverse `A_V`, with `J_{A_V} = proj_V∘J_A + proj_{V⊥}∘(Id − J_A)`.
pub fn partial_inverse(a: &MonotoneOp, v: &ConvexSet) -> Result<MonotoneOp> {
    if !v.is_subspace() {
        return Err(Error::Precondition("partial inverse needs a linear subspace".into()));
    }
    if let Some(d) = a.dim() {
        check_dim(d, v.dim())?;
    }
    let n = v.dim();
    let p = v.projector_matrix()?;
    let r = a.resolvent_map();
    let unit = move |z: &Vector| -> Result<Vector> {
        check_dim(n, z.len())?;
        let j = r(1.0, z)?;
        let rest = z - &j;
        Ok(&p * &j + &rest - &p * &rest)
    };
    Ok(MonotoneOp::from_resolvent(
        format!("partial_inverse({})", a.label()),
        Some(n),
        move |g, x| rescale_unit_resolvent(&unit, g, x),
    ))
}

/// `C` with `J_C = Id + (W − Id)/(2α)` for an `α`-averaged `W`, so that the
/// relaxed iteration `x ← x + 2α(J_C x − x)` reproduces `x ← Wx`.
///
/// The deduced `R = (W − (1−α)Id)/α` is checked to be nonexpansive on
/// samples from `B(0; 10)`.
pub fn displacement_resolvent<W>(dim: usize, alpha: f64, w: W) -> Result<MonotoneOp>
where
    W: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
{
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let r = |x: &Vector| -> Result<Vector> { Ok((w(x)? - x * (1.0 - alpha)) / alpha) };
    let audit = audit_lipschitz(r, 1.0, dim, &Sampler::new(0x00d1_5e1a, 2000, 10.0))?;
    if !audit.passed {
        return Err(Error::Precondition(format!(
            "W is not {alpha}-averaged: (W − (1−α)Id)/α expands distances by {}",
            1.0 + audit.max_violation
        )));
    }
    let scale = 1.0 / (2.0 * alpha);
    let unit = move |x: &Vector| -> Result<Vector> { Ok(x + (w(x)? - x) * scale) };
    Ok(MonotoneOp::from_resolvent("displacement", Some(dim), move |g, x| {
        rescale_unit_resolvent(&unit, g, x)
    }))
}
