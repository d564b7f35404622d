//! Proximity operators of convex functions and the transformations that
//! preserve them.

mod catalog;
mod transform;

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, check_gamma, Error, Result};
use crate::linalg::{all_finite, Vector};

pub use catalog::{
    ball_cone_indicator, indicator, l1, l2_norm, norm_plus_cone_indicator, prox_eval, radial,
    radial_plus_support, support, zero, Phi, ProxSpec, Quadratic, WeightedProx, WeightedTerm,
};
pub use transform::{
    composite_average, conjugate_by, convex_combination, moreau_complement,
    parallel_composition, prox_compose_1d, prox_sum_projectors, prox_transform, reflect,
    resolvent_of, translate, underrelax, CompositeTerm, TransformSpec,
};

pub(crate) type ProxMap = Arc<dyn Fn(f64, &Vector) -> Result<Vector> + Send + Sync>;
pub(crate) type ValueMap = Arc<dyn Fn(&Vector) -> Result<f64> + Send + Sync>;

/// A function `f ∈ Γ₀` represented by the map `(γ, x) ↦ prox_{γf}(x)`,
/// optionally with oracles for `f` and its conjugate `f*`.
///
/// Values are extended reals: `+∞` is returned outside the domain.
#[derive(Clone)]
pub struct ProxFn {
    dim: Option<usize>,
    prox: ProxMap,
    value: Option<ValueMap>,
    conjugate_value: Option<ValueMap>,
    lipschitz_of_prox: Option<f64>,
    label: String,
}

impl fmt::Debug for ProxFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProxFn")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("value", &self.value.is_some())
            .field("conjugate_value", &self.conjugate_value.is_some())
            .field("lipschitz_of_prox", &self.lipschitz_of_prox)
            .finish()
    }
}

impl ProxFn {
    /// `dim = None` means the function is defined on every `R^n`.
    pub fn new<F>(label: impl Into<String>, dim: Option<usize>, prox: F) -> Self
    where
        F: Fn(f64, &Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        ProxFn {
            dim,
            prox: Arc::new(prox),
            value: None,
            conjugate_value: None,
            lipschitz_of_prox: Some(1.0),
            label: label.into(),
        }
    }

    pub fn with_value<F>(mut self, value: F) -> Self
    where
        F: Fn(&Vector) -> Result<f64> + Send + Sync + 'static,
    {
        self.value = Some(Arc::new(value));
        self
    }

    pub fn with_conjugate_value<F>(mut self, value: F) -> Self
    where
        F: Fn(&Vector) -> Result<f64> + Send + Sync + 'static,
    {
        self.conjugate_value = Some(Arc::new(value));
        self
    }

    pub fn with_lipschitz(mut self, lipschitz: Option<f64>) -> Self {
        self.lipschitz_of_prox = lipschitz;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub(crate) fn value_map(&self) -> Option<ValueMap> {
        self.value.clone()
    }

    pub(crate) fn conjugate_map(&self) -> Option<ValueMap> {
        self.conjugate_value.clone()
    }

    pub(crate) fn raw(&self) -> ProxMap {
        self.prox.clone()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn lipschitz_of_prox(&self) -> Option<f64> {
        self.lipschitz_of_prox
    }

    pub fn has_value(&self) -> bool {
        self.value.is_some()
    }

    pub fn has_conjugate_value(&self) -> bool {
        self.conjugate_value.is_some()
    }

    fn check_input(&self, x: &Vector) -> Result<()> {
        if let Some(d) = self.dim {
            check_dim(d, x.len())?;
        }
        Ok(())
    }

    /// `prox_{γf}(x)`.
    pub fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        self.check_input(x)?;
        let p = (self.prox)(gamma, x)?;
        if !all_finite(&p) {
            return Err(Error::NonFinite("prox output"));
        }
        Ok(p)
    }

    /// `x ↦ prox_{γf}(x)` as a plain map.
    pub fn at(&self, gamma: f64) -> impl Fn(&Vector) -> Result<Vector> + '_ {
        move |x| self.prox(gamma, x)
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        self.check_input(x)?;
        match &self.value {
            Some(f) => f(x),
            None => Err(Error::Unsupported(format!("no value oracle for `{}`", self.label))),
        }
    }

    pub fn conjugate_value(&self, u: &Vector) -> Result<f64> {
        self.check_input(u)?;
        match &self.conjugate_value {
            Some(f) => f(u),
            None => Err(Error::Unsupported(format!(
                "no conjugate value oracle for `{}`",
                self.label
            ))),
        }
    }

    /// Moreau envelope `f□(‖·‖²/(2γ))` at `x`, via the prox.
    pub fn envelope(&self, gamma: f64, x: &Vector) -> Result<f64> {
        let p = self.prox(gamma, x)?;
        Ok(self.value(&p)? + (x - &p).norm_squared() / (2.0 * gamma))
    }
}
