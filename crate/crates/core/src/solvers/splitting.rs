//! Single-variable schemes: proximal point, forward–backward, Tseng,
//! Douglas–Rachford, parallel projections and the partial inverse method.

use super::{SolverConfig, SolverTrace, StepPolicy};
use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;
use crate::monotone::MonotoneOp;
use crate::oracle::{audit_lipschitz, Sampler};
use crate::prox::ProxFn;
use crate::sets::ConvexSet;

const ANY_POSITIVE: (f64, f64) = (f64::MIN_POSITIVE, f64::MAX);

fn problem_dim(dims: &[Option<usize>], cfg: &SolverConfig) -> Result<usize> {
    let mut known = dims.iter().flatten().copied();
    let dim = match known.next() {
        Some(d) => d,
        None => match &cfg.x0 {
            Some(x) => x.len(),
            None => {
                return Err(Error::param(
                    "x0",
                    "operators are dimension-agnostic; give a starting point",
                ))
            }
        },
    };
    for d in known {
        check_dim(dim, d)?;
    }
    Ok(dim)
}

fn reject_policy(p: &Option<StepPolicy>, name: &'static str, solver: &str) -> Result<()> {
    match p {
        Some(_) => Err(Error::param(name, format!("not used by {solver}"))),
        None => Ok(()),
    }
}

/// Relaxation parameters of the proximal point method live in `(0, 2)`.
fn ppa_relaxation(cfg: &SolverConfig) -> Result<Option<StepPolicy>> {
    if let Some(p) = &cfg.relaxation {
        p.check("relaxation", f64::MIN_POSITIVE, 2.0 - f64::EPSILON)?;
    }
    Ok(cfg.relaxation.clone())
}

/// `x_{n+1} = x_n + λ_n(J_{γ_n A}x_n − x_n)`; without a relaxation policy
/// the update is exactly `x_{n+1} = J_{γ_n A}x_n`.
pub fn run_ppa(a: &MonotoneOp, cfg: &SolverConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    let dim = problem_dim(&[a.dim()], cfg)?;
    let gamma = cfg.gamma_in(ANY_POSITIVE.0, ANY_POSITIVE.1, 1.0)?;
    let relax = ppa_relaxation(cfg)?;
    let mut trace = SolverTrace::start(cfg.start("x0", dim)?);
    for n in 0..cfg.max_iter {
        let g = gamma.at(n);
        let x = trace.final_iterate().clone();
        let p = a.resolvent(g, &x)?;
        let next = match &relax {
            Some(l) => &x + (&p - &x) * l.at(n),
            None => p,
        };
        let change = (&next - &x).norm();
        trace.iterates.push(next);
        if trace.step(cfg, g, change, x.norm(), None).is_some() {
            break;
        }
    }
    Ok(trace)
}

/// `W = J_{γA}∘(Id − γB)`, evaluated exactly as [`run_forward_backward`] does.
pub fn forward_backward_map(
    a: &MonotoneOp,
    b: &MonotoneOp,
    gamma: f64,
) -> impl Fn(&Vector) -> Result<Vector> + Send + Sync + 'static {
    let (a, b) = (a.clone(), b.clone());
    move |x| fb_step(&a, &b, gamma, x)
}

fn fb_step(a: &MonotoneOp, b: &MonotoneOp, gamma: f64, x: &Vector) -> Result<Vector> {
    let y = x - b.forward(x)? * gamma;
    a.resolvent(gamma, &y)
}

/// Forward–backward splitting for `0 ∈ Ax + Bx` with `B` `1/β`-cocoercive.
/// Steps must satisfy `ε ≤ γ_n ≤ (2−ε)/β` with `ε ∈ (0, 2/(β+1))`.
pub fn run_forward_backward(
    a: &MonotoneOp,
    b: &MonotoneOp,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<SolverTrace> {
    cfg.validate()?;
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::param("beta", format!("must be >= 0, got {beta}")));
    }
    if !b.has_forward() {
        return Err(Error::Precondition(format!(
            "forward-backward needs a single-valued `{}`",
            b.label()
        )));
    }
    reject_policy(&cfg.relaxation, "relaxation", "forward-backward")?;
    let dim = problem_dim(&[a.dim(), b.dim()], cfg)?;
    let eps = cfg.epsilon_below(2.0 / (beta + 1.0))?;
    let (hi, fallback) = if beta > 0.0 {
        ((2.0 - eps) / beta, 1.0 / beta)
    } else {
        (f64::MAX, 1.0)
    };
    let gamma = cfg.gamma_in(eps, hi, fallback.max(eps))?;
    let x0 = cfg.start("x0", dim)?;
    let mut trace = SolverTrace::start(x0.clone());

    let audit = Sampler::new(cfg.seed, 200, 10.0 + x0.norm());
    let report = audit_lipschitz(|x| b.forward(x), beta, dim, &audit)?;
    if !report.passed {
        trace.warnings.push(format!(
            "sampled difference quotients of `{}` exceed beta = {beta} by {:.3e}",
            b.label(),
            report.max_violation
        ));
    }

    for n in 0..cfg.max_iter {
        let g = gamma.at(n);
        let x = trace.final_iterate().clone();
        let next = fb_step(a, b, g, &x)?;
        let change = (&next - &x).norm();
        trace.iterates.push(next);
        if trace.step(cfg, g, change, x.norm(), None).is_some() {
            break;
        }
    }
    Ok(trace)
}

/// Tseng's forward–backward–forward splitting with `B` `β`-Lipschitz.
/// Steps must satisfy `ε ≤ γ_n ≤ (1−ε)/β` with `ε ∈ (0, 1/(β+1))`.
pub fn run_fbf(a: &MonotoneOp, b: &MonotoneOp, cfg: &SolverConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    let beta = b.lipschitz().ok_or_else(|| {
        Error::Precondition(format!("`{}` has no Lipschitz constant", b.label()))
    })?;
    if !b.has_forward() {
        return Err(Error::Precondition(format!(
            "forward-backward-forward needs a single-valued `{}`",
            b.label()
        )));
    }
    reject_policy(&cfg.relaxation, "relaxation", "forward-backward-forward")?;
    let dim = problem_dim(&[a.dim(), b.dim()], cfg)?;
    let eps = cfg.epsilon_below(1.0 / (beta + 1.0))?;
    let (hi, fallback) = if beta > 0.0 {
        let hi = (1.0 - eps) / beta;
        (hi, 0.5 * (eps + hi))
    } else {
        (f64::MAX, 1.0)
    };
    let gamma = cfg.gamma_in(eps, hi, fallback)?;
    let mut trace = SolverTrace::start(cfg.start("x0", dim)?);
    for n in 0..cfg.max_iter {
        let g = gamma.at(n);
        let x = trace.final_iterate().clone();
        let y = &x - b.forward(&x)? * g;
        let p = a.resolvent(g, &y)?;
        let q = &p - b.forward(&p)? * g;
        let next = &x - &y + &q;
        let change = (&next - &x).norm();
        trace.iterates.push(next);
        if trace.step(cfg, g, change, x.norm(), None).is_some() {
            break;
        }
    }
    Ok(trace)
}

/// The governing map `T: y ↦ y + J_{γA}(2J_{γB}y − y) − J_{γB}y`, evaluated
/// exactly as [`run_douglas_rachford`] does.
pub fn douglas_rachford_map(
    a: &MonotoneOp,
    b: &MonotoneOp,
    gamma: f64,
) -> impl Fn(&Vector) -> Result<Vector> + Send + Sync + 'static {
    let (a, b) = (a.clone(), b.clone());
    move |y| {
        let x = b.resolvent(gamma, y)?;
        let z = a.resolvent(gamma, &(&x * 2.0 - y))?;
        Ok(y + &z - &x)
    }
}

/// Douglas–Rachford splitting. The trace holds `x_n = J_{γB}y_n` as
/// iterates, `z_n` as dual iterates and the governing `y_n` as auxiliary;
/// residuals measure `‖y_{n+1} − y_n‖`. The start is `y0`, else `x0`.
pub fn run_douglas_rachford(
    a: &MonotoneOp,
    b: &MonotoneOp,
    gamma: f64,
    cfg: &SolverConfig,
) -> Result<SolverTrace> {
    cfg.validate()?;
    crate::error::check_gamma(gamma)?;
    match &cfg.gamma {
        None => {}
        Some(StepPolicy::Constant(g)) if *g == gamma => {}
        Some(_) => {
            return Err(Error::param(
                "gamma",
                "Douglas-Rachford takes one fixed step; the configured policy disagrees",
            ))
        }
    }
    reject_policy(&cfg.relaxation, "relaxation", "Douglas-Rachford")?;
    let dim = problem_dim(&[a.dim(), b.dim()], cfg)?;
    let y0 = match &cfg.y0 {
        Some(_) => cfg.start("y0", dim)?,
        None => cfg.start("x0", dim)?,
    };
    let mut trace = SolverTrace::start(b.resolvent(gamma, &y0)?);
    trace.auxiliary.push(y0);
    for _ in 0..cfg.max_iter {
        let y = trace.auxiliary.last().expect("y_0 pushed").clone();
        let x = trace.final_iterate().clone();
        let z = a.resolvent(gamma, &(&x * 2.0 - &y))?;
        let next = &y + &z - &x;
        let change = (&next - &y).norm();
        trace.iterates.push(b.resolvent(gamma, &next)?);
        trace.dual_iterates.push(z);
        trace.auxiliary.push(next);
        if trace.step(cfg, gamma, change, y.norm(), None).is_some() {
            break;
        }
    }
    Ok(trace)
}

/// `x_{n+1} = x_n + λ_n(Σ ωᵢ proj_{Cᵢ}x_n − x_n)` with `ε ≤ λ_n ≤ 2−ε`.
pub fn run_parallel_projection(
    sets: &[ConvexSet],
    weights: &[f64],
    cfg: &SolverConfig,
) -> Result<SolverTrace> {
    cfg.validate()?;
    if sets.is_empty() {
        return Err(Error::param("sets", "must not be empty"));
    }
    check_dim(sets.len(), weights.len())?;
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::param("weights", format!("must be > 0, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::param("weights", format!("must sum to 1, got {total}")));
    }
    reject_policy(&cfg.gamma, "gamma", "parallel projections")?;
    let dims: Vec<_> = sets.iter().map(|s| Some(s.dim())).collect();
    let dim = problem_dim(&dims, cfg)?;
    let eps = cfg.epsilon_below(1.0)?;
    let relax = cfg.relaxation.clone().unwrap_or(StepPolicy::Constant(1.0));
    relax.check("relaxation", eps, 2.0 - eps)?;

    let mut trace = SolverTrace::start(cfg.start("x0", dim)?);
    for n in 0..cfg.max_iter {
        let l = relax.at(n);
        let x = trace.final_iterate().clone();
        let mut avg = Vector::zeros(dim);
        for (c, w) in sets.iter().zip(weights) {
            avg += c.project(&x)? * *w;
        }
        let next = &x + (&avg - &x) * l;
        let change = (&next - &x).norm();
        trace.iterates.push(next);
        if trace.step(cfg, l, change, x.norm(), None).is_some() {
            break;
        }
    }
    Ok(trace)
}

/// Method of partial inverses for `min f` over a subspace `V`: primal
/// iterates stay in `V`, dual iterates in `V⊥`, and at a limit `u ∈ ∂f(x)`.
pub fn run_partial_inverse_method(
    f: &ProxFn,
    v: &ConvexSet,
    cfg: &SolverConfig,
) -> Result<SolverTrace> {
    cfg.validate()?;
    if !v.is_subspace() {
        return Err(Error::Precondition("the partial inverse method needs a linear subspace".into()));
    }
    match &cfg.gamma {
        None => {}
        Some(StepPolicy::Constant(g)) if *g == 1.0 => {}
        Some(_) => {
            return Err(Error::param(
                "gamma",
                "the partial inverse method runs at unit step; rescale f instead",
            ))
        }
    }
    reject_policy(&cfg.relaxation, "relaxation", "the partial inverse method")?;
    let dim = problem_dim(&[Some(v.dim()), f.dim()], cfg)?;
    let x0 = v.project(&cfg.start("x0", dim)?)?;
    let u0 = cfg.start("v0", dim)?;
    let u0 = &u0 - v.project(&u0)?;

    let mut trace = SolverTrace::start(x0);
    trace.dual_iterates.push(u0);
    for _ in 0..cfg.max_iter {
        let x = trace.final_iterate().clone();
        let u = trace.final_dual().expect("u_0 pushed").clone();
        let s = &x + &u;
        let y = f.prox(1.0, &s)?;
        let w = &s - &y;
        let x_next = v.project(&y)?;
        let u_next = &w - v.project(&w)?;
        let change = ((&x_next - &x).norm_squared() + (&u_next - &u).norm_squared()).sqrt();
        let scale = (x.norm_squared() + u.norm_squared()).sqrt();
        trace.iterates.push(x_next);
        trace.dual_iterates.push(u_next);
        if trace.step(cfg, 1.0, change, scale, None).is_some() {
            break;
        }
    }
    if f.has_value() {
        trace.record_objective(|x| f.value(x))?;
    }
    Ok(trace)
}
