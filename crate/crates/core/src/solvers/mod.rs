//! Fixed-point iterations built from resolvents, with step-size guards and
//! trace recording.

mod primal_dual;
mod splitting;

pub use primal_dual::{
    composite_dual_value, composite_primal_value, lagrangian_dual_value, lagrangian_primal_value,
    run_pd_chen, run_pd_composite, run_pd_lagrangian,
};
pub use splitting::{
    douglas_rachford_map, forward_backward_map, run_douglas_rachford, run_fbf,
    run_forward_backward, run_parallel_projection, run_partial_inverse_method, run_ppa,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{all_finite, Vector};
use crate::oracle::Sampler;

/// Iterates beyond this norm are reported as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// A step-size (or relaxation) schedule. A sequence is consumed in order and
/// its last entry repeats once exhausted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepPolicy {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl StepPolicy {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            StepPolicy::Constant(g) => *g,
            StepPolicy::Sequence(s) => s[n.min(s.len() - 1)],
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            StepPolicy::Constant(g) => std::slice::from_ref(g),
            StepPolicy::Sequence(s) => s,
        }
    }

    /// Every value the schedule can produce must lie in `[lo, hi]`.
    pub(crate) fn check(&self, name: &'static str, lo: f64, hi: f64) -> Result<()> {
        let values = self.values();
        if values.is_empty() {
            return Err(Error::param(name, "sequence must not be empty"));
        }
        for (i, &g) in values.iter().enumerate() {
            if !(g.is_finite() && g >= lo && g <= hi) {
                return Err(Error::param(
                    name,
                    format!("entry {i} = {g} lies outside [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }
}

/// How the starting point is chosen when it is not given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    Zero,
    /// Uniform in the ball of the given radius, drawn from `seed`.
    Random(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Margin of the step-size brackets. When absent, the smaller of `1e-6`
    /// and half the admissible range is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// When absent each solver picks a step in the middle of its bracket.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<StepPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<StepPolicy>,
    pub seed: u64,
    pub init: Init,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 1000,
            tol: 1e-10,
            epsilon: None,
            gamma: None,
            relaxation: None,
            seed: 0,
            init: Init::Zero,
            x0: None,
            y0: None,
            v0: None,
        }
    }
}

impl SolverConfig {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(StepPolicy::Constant(gamma));
        self
    }

    pub fn with_relaxation(mut self, lambda: f64) -> Self {
        self.relaxation = Some(StepPolicy::Constant(lambda));
        self
    }

    pub fn with_x0(mut self, x0: &[f64]) -> Self {
        self.x0 = Some(x0.to_vec());
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::param("tol", format!("must be > 0, got {}", self.tol)));
        }
        if let Init::Random(r) = self.init {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::param("init", format!("radius must be > 0, got {r}")));
            }
        }
        Ok(())
    }

    /// The bracket margin, required to lie in `(0, upper)`.
    pub(crate) fn epsilon_below(&self, upper: f64) -> Result<f64> {
        match self.epsilon {
            None => Ok(1e-6f64.min(upper / 2.0)),
            Some(e) if e > 0.0 && e < upper => Ok(e),
            Some(e) => Err(Error::param(
                "epsilon",
                format!("must lie in (0, {upper}), got {e}"),
            )),
        }
    }

    /// The γ schedule checked against `[lo, hi]`; `fallback` when unset.
    pub(crate) fn gamma_in(&self, lo: f64, hi: f64, fallback: f64) -> Result<StepPolicy> {
        let policy = self.gamma.clone().unwrap_or(StepPolicy::Constant(fallback));
        policy.check("gamma", lo, hi)?;
        Ok(policy)
    }

    /// Starting point for the variable named `which` (x0, y0 or v0).
    pub(crate) fn start(&self, which: &'static str, dim: usize) -> Result<Vector> {
        let given = match which {
            "x0" => &self.x0,
            "y0" => &self.y0,
            _ => &self.v0,
        };
        if let Some(x) = given {
            check_dim(dim, x.len())?;
            let x = Vector::from_column_slice(x);
            if !all_finite(&x) {
                return Err(Error::NonFinite(which));
            }
            return Ok(x);
        }
        Ok(match self.init {
            Init::Zero => Vector::zeros(dim),
            Init::Random(radius) => {
                // one stream per variable so that x0 does not depend on dim(v0)
                let salt = match which {
                    "x0" => 0,
                    "y0" => 1,
                    _ => 2,
                };
                let s = Sampler::new(self.seed.wrapping_add(salt), 1, radius);
                s.point(&mut s.rng(), dim)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
}

/// Everything a run produced. `iterates` holds `x_0, …, x_N`; the per-step
/// lists (`residuals`, `gamma_used`, and `kkt_residuals` / `objective` when
/// non-empty) hold one entry per step `n = 0, …, N−1`.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub iterates: Vec<Vector>,
    /// Dual variable where one exists: `v` (primal-dual), `u` (partial
    /// inverses), `z` (Douglas–Rachford).
    pub dual_iterates: Vec<Vector>,
    /// The governing sequence `y` of Douglas–Rachford and the splitting
    /// variable `y` of the Lagrangian schemes.
    pub auxiliary: Vec<Vector>,
    pub residuals: Vec<f64>,
    pub kkt_residuals: Vec<f64>,
    pub objective: Vec<f64>,
    pub gamma_used: Vec<f64>,
    pub status: Status,
    pub primal_value: Option<f64>,
    pub dual_value: Option<f64>,
    pub gap: Option<f64>,
    pub warnings: Vec<String>,
}

impl SolverTrace {
    fn start(x0: Vector) -> Self {
        SolverTrace {
            iterates: vec![x0],
            dual_iterates: Vec::new(),
            auxiliary: Vec::new(),
            residuals: Vec::new(),
            kkt_residuals: Vec::new(),
            objective: Vec::new(),
            gamma_used: Vec::new(),
            status: Status::MaxIter,
            primal_value: None,
            dual_value: None,
            gap: None,
            warnings: Vec::new(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_iterate(&self) -> &Vector {
        self.iterates.last().expect("a trace always holds x_0")
    }

    pub fn final_dual(&self) -> Option<&Vector> {
        self.dual_iterates.last()
    }

    /// Fills `objective` with `value(x_{n+1})` for every step.
    pub fn record_objective<F>(&mut self, value: F) -> Result<()>
    where
        F: Fn(&Vector) -> Result<f64>,
    {
        self.objective = self.iterates[1..].iter().map(value).collect::<Result<_>>()?;
        Ok(())
    }

    /// Books one step and decides whether to stop. `state_change` is the
    /// distance between consecutive full states; `kkt` an optional residual
    /// that must vanish too.
    fn step(
        &mut self,
        cfg: &SolverConfig,
        gamma: f64,
        state_change: f64,
        scale: f64,
        kkt: Option<f64>,
    ) -> Option<Status> {
        self.gamma_used.push(gamma);
        self.residuals.push(state_change);
        if let Some(k) = kkt {
            self.kkt_residuals.push(k);
        }
        let x = self.final_iterate();
        let finite = state_change.is_finite() && all_finite(x);
        if !finite || x.norm() > DIVERGENCE_NORM {
            self.status = Status::Diverged;
            return Some(Status::Diverged);
        }
        let bound = cfg.tol * (1.0 + scale);
        if state_change <= bound && kkt.is_none_or(|k| k <= bound) {
            self.status = Status::Converged;
            return Some(Status::Converged);
        }
        None
    }
}
