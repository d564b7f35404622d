//! Inner fixed-point solves shared by the operator constructions.
//!
//! Two problems come up repeatedly:
//!
//! * evaluating `J_{γC}` when only `J_C` is available (combinators whose
//!   closed form is known at unit step only), and
//! * evaluating `J_{γB} = (Id + γB)⁻¹` for a monotone Lipschitz map `B`
//!   known only through forward evaluations.
//!
//! Both are strongly monotone equations and are solved by contractive
//! iterations whose stopping rules bound the distance to the exact solution.

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Absolute residual target (scaled by `max(1, ‖x‖)`).
pub const INNER_TOLERANCE: f64 = 1e-12;

/// Iteration cap for the damped solve of `p + γT(p) = x`.
pub const DAMPED_MAX_ITER: usize = 10_000;

const RESCALE_MAX_ITER: usize = 1_000_000;
const FORWARD_MAX_ITER: usize = 100_000;

/// `J_{γC}(x)` from the unit resolvent `J_C`.
///
/// Writing `p = J_C(w)` turns `x ∈ p + γCp` into `x = (1−γ)J_C(w) + γw`,
/// which is a contraction in `w` with factor `|1−γ|/γ` for `γ > 1` and, as
/// `w ↦ x + (1−γ)(w − J_C w)`, with factor `1−γ` for `γ < 1`.
pub fn rescale_unit_resolvent<F>(unit: F, gamma: f64, x: &Vector) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if gamma == 1.0 {
        return unit(x);
    }
    let (factor, step): (f64, Box<dyn Fn(&Vector, &Vector) -> Vector>) = if gamma > 1.0 {
        (
            (gamma - 1.0) / gamma,
            Box::new(move |_w: &Vector, tw: &Vector| (x + tw * (gamma - 1.0)) / gamma),
        )
    } else {
        (
            1.0 - gamma,
            Box::new(move |w: &Vector, tw: &Vector| x + (w - tw) * (1.0 - gamma)),
        )
    };
    let tol = INNER_TOLERANCE * x.norm().max(1.0);
    let mut w = x.clone();
    let mut last = f64::INFINITY;
    for _ in 0..RESCALE_MAX_ITER {
        let tw = unit(&w)?;
        let next = step(&w, &tw);
        let delta = (&next - &w).norm();
        w = next;
        last = delta;
        // a posteriori bound on ‖w − w*‖
        if delta * factor / (1.0 - factor) <= tol {
            return unit(&w);
        }
    }
    Err(Error::NonConvergence {
        what: "resolvent rescaling",
        iterations: RESCALE_MAX_ITER,
        residual: last,
    })
}

/// Solve `p + γ·T(p) = x` for monotone `T` with Lipschitz constant `lipschitz`
/// by damped fixed-point iteration with step `1/(1+γL)²`.
///
/// The residual `‖p + γT(p) − x‖` bounds `‖p − p*‖` because the map is
/// 1-strongly monotone.
pub fn damped_resolvent<F>(
    forward: F,
    lipschitz: f64,
    gamma: f64,
    x: &Vector,
    max_iter: usize,
) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let scale = gamma * lipschitz;
    let tol = INNER_TOLERANCE * x.norm().max(1.0);
    let mut p = x / (1.0 + scale);
    let mut residual = f64::INFINITY;
    if scale < 0.5 {
        // plain contraction p ← x − γT(p), factor γL
        for _ in 0..max_iter {
            let tp = forward(&p)?;
            let r = &p + &tp * gamma - x;
            residual = r.norm();
            if residual <= tol {
                return Ok(p);
            }
            p = x - tp * gamma;
        }
    } else {
        let step = 1.0 / ((1.0 + scale) * (1.0 + scale));
        for _ in 0..max_iter {
            let r = &p + forward(&p)? * gamma - x;
            residual = r.norm();
            if residual <= tol {
                return Ok(p);
            }
            p -= r * step;
        }
    }
    Err(Error::NonConvergence {
        what: "damped resolvent",
        iterations: max_iter,
        residual,
    })
}

/// [`damped_resolvent`] with the cap used for forward-only operators.
pub fn forward_resolvent<F>(forward: F, lipschitz: f64, gamma: f64, x: &Vector) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    damped_resolvent(forward, lipschitz, gamma, x, FORWARD_MAX_ITER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn rescaling_a_linear_resolvent_matches_direct_solve() {
        // C = diag(1, 3): J_{γC} = diag(1/(1+γ), 1/(1+3γ))
        let unit = |x: &Vector| Ok(v(&[x[0] / 2.0, x[1] / 4.0]));
        for gamma in [0.1, 0.5, 1.0, 2.0, 7.5] {
            let x = v(&[1.0, -2.0]);
            let got = rescale_unit_resolvent(unit, gamma, &x).unwrap();
            let want = v(&[1.0 / (1.0 + gamma), -2.0 / (1.0 + 3.0 * gamma)]);
            assert!((got - want).norm() < 1e-11, "gamma={gamma}");
        }
    }

    #[test]
    fn damped_resolvent_of_skew_map() {
        let s = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let fwd = |p: &Vector| Ok(&s * p);
        let x = v(&[1.0, 1.0]);
        for gamma in [0.25, 1.0, 4.0] {
            let got = damped_resolvent(fwd, 1.0, gamma, &x, DAMPED_MAX_ITER).unwrap();
            let m = Matrix::identity(2, 2) + &s * gamma;
            let want = m.lu().solve(&x).unwrap();
            assert!((got - want).norm() < 1e-11, "gamma={gamma}");
        }
    }

    #[test]
    fn damped_resolvent_reports_failure() {
        let s = Matrix::from_row_slice(2, 2, &[0.0, -50.0, 50.0, 0.0]);
        let fwd = |p: &Vector| Ok(&s * p);
        let err = damped_resolvent(fwd, 50.0, 1.0, &v(&[1.0, 1.0]), 3).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }));
    }
}
