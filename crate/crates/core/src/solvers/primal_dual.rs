//! Primal–dual schemes for composite problems and for `min f(x) + g(Lx)`.

use super::{SolverConfig, SolverTrace};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{LinOp, Vector};
use crate::monotone::SaddleSpec;
use crate::prox::{moreau_complement, ProxFn};
use crate::smooth::SmoothTerm;

const INNER_TOL: f64 = 1e-13;
const INNER_MAX_ITER: usize = 100_000;

/// Minimizes `φ(x) + s(x) − ⟨w, x⟩` by forward–backward with step `1/lip`
/// and returns the optimal value.
fn prox_grad_min(
    phi: &ProxFn,
    s: &SmoothTerm,
    w: &Vector,
    mut x: Vector,
) -> Result<f64> {
    let step = 1.0 / s.lipschitz();
    let objective = |x: &Vector| -> Result<f64> { Ok(phi.value(x)? + s.value(x)? - w.dot(x)) };
    for _ in 0..INNER_MAX_ITER {
        let next = phi.prox(step, &(&x - (s.gradient(&x)? - w) * step))?;
        let change = (&next - &x).norm();
        x = next;
        if change <= INNER_TOL * (1.0 + x.norm()) {
            return objective(&x);
        }
    }
    Err(Error::NonConvergence {
        what: "inner conjugate evaluation",
        iterations: INNER_MAX_ITER,
        residual: f64::NAN,
    })
}

/// `(φ + s)*(w)`. An affine `s = ⟨a,·⟩ + c` only shifts the conjugate of
/// `φ`; otherwise the defining supremum is solved numerically.
fn conjugate_of_sum(phi: &ProxFn, s: &SmoothTerm, w: &Vector) -> Result<f64> {
    let zero = Vector::zeros(w.len());
    if s.is_affine() {
        let a = s.gradient(&zero)?;
        return Ok(phi.conjugate_value(&(w - a))? - s.value(&zero)?);
    }
    if !phi.has_value() {
        return Err(Error::Unsupported(format!("`{}` has no value oracle", phi.label())));
    }
    Ok(-prox_grad_min(phi, s, w, zero)?)
}

/// `(g□ℓ)(y)` from `g` and the smooth `ℓ*`, using `(g□ℓ) = (g* + ℓ*)*`.
fn infimal_value(g: &ProxFn, ell_star: &SmoothTerm, y: &Vector) -> Result<f64> {
    let zero = Vector::zeros(y.len());
    if ell_star.is_affine() {
        // ℓ = ι_{d} − e with d = ∇ℓ*(0), e = ℓ*(0)
        let d = ell_star.gradient(&zero)?;
        return Ok(g.value(&(y - d))? - ell_star.value(&zero)?);
    }
    conjugate_of_sum(&moreau_complement(g), ell_star, y)
}

/// `f(x) + h(x) + (g□ℓ)(Lx)`.
pub fn composite_primal_value(s: &SaddleSpec, x: &Vector) -> Result<f64> {
    check_dim(s.primal_dim(), x.len())?;
    Ok(s.f.value(x)? + s.h.value(x)? + infimal_value(&s.g, &s.ell_star, &s.l.forward(x)?)?)
}

/// `−[(f + h)*(−L*v) + g*(v) + ℓ*(v)]`.
pub fn composite_dual_value(s: &SaddleSpec, v: &Vector) -> Result<f64> {
    check_dim(s.dual_dim(), v.len())?;
    let w = -s.l.adjoint(v)?;
    Ok(-(conjugate_of_sum(&s.f, &s.h, &w)? + s.g.conjugate_value(v)? + s.ell_star.value(v)?))
}

/// `f(x) + g(Lx)`.
pub fn lagrangian_primal_value(f: &ProxFn, g: &ProxFn, l: &LinOp, x: &Vector) -> Result<f64> {
    Ok(f.value(x)? + g.value(&l.forward(x)?)?)
}

/// `−[f*(−L*v) + g*(v)]`.
pub fn lagrangian_dual_value(f: &ProxFn, g: &ProxFn, l: &LinOp, v: &Vector) -> Result<f64> {
    Ok(-(f.conjugate_value(&-l.adjoint(v)?)? + g.conjugate_value(v)?))
}

fn finish_gap(trace: &mut SolverTrace, primal: Result<f64>, dual: Result<f64>) {
    trace.primal_value = primal.ok().filter(|p| p.is_finite());
    trace.dual_value = dual.ok().filter(|d| d.is_finite());
    if let (Some(p), Some(d)) = (trace.primal_value, trace.dual_value) {
        trace.gap = Some(p - d);
    }
}

fn state_norm(parts: &[&Vector]) -> f64 {
    parts.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt()
}

fn state_change(new: &[&Vector], old: &[&Vector]) -> f64 {
    new.iter()
        .zip(old)
        .map(|(a, b)| (*a - *b).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// Step bracket `[ε, (1−ε)/β]` with `ε ∈ (0, 1/(β+1))`, shared by the
/// forward–backward–forward type schemes.
fn fbf_gamma(cfg: &SolverConfig, beta: f64) -> Result<super::StepPolicy> {
    let eps = cfg.epsilon_below(1.0 / (beta + 1.0))?;
    if beta > 0.0 {
        let hi = (1.0 - eps) / beta;
        cfg.gamma_in(eps, hi, 0.5 * (eps + hi))
    } else {
        cfg.gamma_in(eps, f64::MAX, 1.0)
    }
}

/// Primal–dual forward–backward–forward scheme for
/// `min f + h + (g□ℓ)∘L`. Iterates are `x_n`, dual iterates `v_n`; the KKT
/// residual is `‖z_n − z_{n+1}‖/γ_n`, the norm of an element of the saddle
/// operator at the intermediate point.
pub fn run_pd_composite(s: &SaddleSpec, cfg: &SolverConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    if cfg.relaxation.is_some() {
        return Err(Error::param("relaxation", "not used by the primal-dual scheme"));
    }
    let (n, k) = (s.primal_dim(), s.dual_dim());
    let beta = s.beta();
    if !beta.is_finite() {
        return Err(Error::NonFinite("beta"));
    }
    let gamma = fbf_gamma(cfg, beta)?;
    let g_star = moreau_complement(&s.g);
    let (f, h, ls, l) = (&s.f, &s.h, &s.ell_star, &s.l);

    let mut trace = SolverTrace::start(cfg.start("x0", n)?);
    trace.dual_iterates.push(cfg.start("v0", k)?);
    for it in 0..cfg.max_iter {
        let g = gamma.at(it);
        let x = trace.final_iterate().clone();
        let v = trace.final_dual().expect("v_0 pushed").clone();
        let y1 = &x - (h.gradient(&x)? + l.adjoint(&v)?) * g;
        let y2 = &v + (l.forward(&x)? - ls.gradient(&v)?) * g;
        let p1 = f.prox(g, &y1)?;
        let p2 = g_star.prox(g, &y2)?;
        let q1 = &p1 - (h.gradient(&p1)? + l.adjoint(&p2)?) * g;
        let q2 = &p2 + (l.forward(&p1)? - ls.gradient(&p2)?) * g;
        let x_next = &x - &y1 + &q1;
        let v_next = &v - &y2 + &q2;
        let change = state_change(&[&x_next, &v_next], &[&x, &v]);
        trace.iterates.push(x_next);
        trace.dual_iterates.push(v_next);
        if trace.step(cfg, g, change, state_norm(&[&x, &v]), Some(change / g)).is_some() {
            break;
        }
    }
    if s.ell_star.is_affine() && s.f.has_value() && s.g.has_value() {
        trace.record_objective(|x| composite_primal_value(s, x))?;
    }
    let x = trace.final_iterate().clone();
    let v = trace.final_dual().expect("v_0 pushed").clone();
    finish_gap(&mut trace, composite_primal_value(s, &x), composite_dual_value(s, &v));
    Ok(trace)
}

struct Triple {
    f: ProxFn,
    g: ProxFn,
    l: LinOp,
}

impl Triple {
    fn new(f: &ProxFn, g: &ProxFn, l: &LinOp) -> Result<Self> {
        if let Some(d) = f.dim() {
            check_dim(l.cols(), d)?;
        }
        if let Some(d) = g.dim() {
            check_dim(l.rows(), d)?;
        }
        Ok(Triple {
            f: f.clone(),
            g: g.clone(),
            l: l.clone(),
        })
    }

    fn norm(&self) -> Result<f64> {
        let norm = self.l.norm();
        if norm.is_finite() {
            Ok(norm)
        } else {
            Err(Error::NonFinite("‖L‖"))
        }
    }

    fn start(&self, cfg: &SolverConfig) -> Result<SolverTrace> {
        let mut trace = SolverTrace::start(cfg.start("x0", self.l.cols())?);
        trace.auxiliary.push(cfg.start("y0", self.l.rows())?);
        trace.dual_iterates.push(cfg.start("v0", self.l.rows())?);
        Ok(trace)
    }

    fn state(trace: &SolverTrace) -> (Vector, Vector, Vector) {
        (
            trace.final_iterate().clone(),
            trace.auxiliary.last().expect("y_0 pushed").clone(),
            trace.final_dual().expect("v_0 pushed").clone(),
        )
    }

    fn finish(&self, trace: &mut SolverTrace) -> Result<()> {
        let (f, g, l) = (&self.f, &self.g, &self.l);
        if f.has_value() && g.has_value() {
            trace.record_objective(|x| lagrangian_primal_value(f, g, l, x))?;
        }
        let (x, _, v) = Triple::state(trace);
        finish_gap(
            trace,
            lagrangian_primal_value(f, g, l, &x),
            lagrangian_dual_value(f, g, l, &v),
        );
        Ok(())
    }
}

/// Forward–backward–forward scheme on the Lagrangian saddle operator of
/// `min f(x) + g(y)` s.t. `Lx = y`, with `γ_n ≤ (1−ε)/√(1+‖L‖²)`. Iterates
/// are `x_n`, auxiliary `y_n`, dual `v_n`; the KKT residual is `‖Lx − y‖`.
pub fn run_pd_lagrangian(
    f: &ProxFn,
    g: &ProxFn,
    l: &LinOp,
    cfg: &SolverConfig,
) -> Result<SolverTrace> {
    cfg.validate()?;
    if cfg.relaxation.is_some() {
        return Err(Error::param("relaxation", "not used by the Lagrangian scheme"));
    }
    let t = Triple::new(f, g, l)?;
    let norm = t.norm()?;
    if norm == 0.0 {
        return Err(Error::Precondition("the Lagrangian scheme requires L ≠ 0".into()));
    }
    let gamma = fbf_gamma(cfg, (1.0 + norm * norm).sqrt())?;
    let mut trace = t.start(cfg)?;
    for it in 0..cfg.max_iter {
        let gm = gamma.at(it);
        let (x, y, v) = Triple::state(&trace);
        let r = (l.forward(&x)? - &y) * gm;
        let p = f.prox(gm, &(&x - l.adjoint(&v)? * gm))?;
        let q = g.prox(gm, &(&y + &v * gm))?;
        let x_next = &p - l.adjoint(&r)? * gm;
        let y_next = &q + &r * gm;
        let v_next = &v + (l.forward(&p)? - &q) * gm;
        let kkt = (l.forward(&x_next)? - &y_next).norm();
        let change = state_change(&[&x_next, &y_next, &v_next], &[&x, &y, &v]);
        trace.iterates.push(x_next);
        trace.auxiliary.push(y_next);
        trace.dual_iterates.push(v_next);
        if trace.step(cfg, gm, change, state_norm(&[&x, &y, &v]), Some(kkt)).is_some() {
            break;
        }
    }
    t.finish(&mut trace)?;
    Ok(trace)
}

/// Predictor–corrector proximal multiplier scheme for the same problem as
/// [`run_pd_lagrangian`], with `γ_n ≤ (1−ε)·min{1, 1/‖L‖}/2`.
pub fn run_pd_chen(f: &ProxFn, g: &ProxFn, l: &LinOp, cfg: &SolverConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    if cfg.relaxation.is_some() {
        return Err(Error::param("relaxation", "not used by this scheme"));
    }
    let t = Triple::new(f, g, l)?;
    let norm = t.norm()?;
    let eps = cfg.epsilon_below(1.0)?;
    let hi = (1.0 - eps) * (if norm > 1.0 { 1.0 / norm } else { 1.0 }) / 2.0;
    let gamma = cfg.gamma_in(eps, hi, 0.5 * (eps + hi))?;
    let mut trace = t.start(cfg)?;
    for it in 0..cfg.max_iter {
        let gm = gamma.at(it);
        let (x, y, v) = Triple::state(&trace);
        let p = &v + (l.forward(&x)? - &y) * gm;
        let x_next = f.prox(gm, &(&x - l.adjoint(&p)? * gm))?;
        let y_next = g.prox(gm, &(&y + &p * gm))?;
        let kkt_vec = l.forward(&x_next)? - &y_next;
        let v_next = &v + &kkt_vec * gm;
        let change = state_change(&[&x_next, &y_next, &v_next], &[&x, &y, &v]);
        trace.iterates.push(x_next);
        trace.auxiliary.push(y_next);
        trace.dual_iterates.push(v_next);
        let scale = state_norm(&[&x, &y, &v]);
        if trace.step(cfg, gm, change, scale, Some(kkt_vec.norm())).is_some() {
            break;
        }
    }
    t.finish(&mut trace)?;
    Ok(trace)
}
