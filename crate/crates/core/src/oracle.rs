//! Independent reference computations and sampled predicates.
//!
//! The predicates only ever produce evidence: a pass means no violation was
//! found among the samples, a failure comes with a concrete witness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{check_dim, check_gamma, Error, Result};
use crate::linalg::{solve, Matrix, Vector};

/// Slack for the firm nonexpansiveness and cyclic monotonicity predicates.
pub const PREDICATE_TOLERANCE: f64 = 1e-10;
/// Relative tolerance of [`check_gradient`].
pub const GRADIENT_TOLERANCE: f64 = 1e-5;

/// Deterministic uniform sampling from the ball `B(0; radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampler {
    pub seed: u64,
    pub count: usize,
    pub radius: f64,
}

impl Sampler {
    pub fn new(seed: u64, count: usize, radius: f64) -> Self {
        Sampler {
            seed,
            count,
            radius,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn point<R: Rng>(&self, rng: &mut R, dim: usize) -> Vector {
        ball_point(rng, dim, self.radius)
    }

    pub fn points(&self, dim: usize) -> Vec<Vector> {
        let mut rng = self.rng();
        (0..self.count).map(|_| self.point(&mut rng, dim)).collect()
    }
}

pub fn ball_point<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vector {
    let g = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = g.norm();
    if n == 0.0 {
        return Vector::zeros(dim);
    }
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    g * (r / n)
}

/// Outcome of a sampled predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub predicate: String,
    pub samples: usize,
    pub max_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Vec<f64>>>,
    pub passed: bool,
}

impl Report {
    fn new(predicate: &str) -> Self {
        Report {
            predicate: predicate.into(),
            samples: 0,
            max_violation: 0.0,
            witness: None,
            passed: true,
        }
    }

    fn record(&mut self, violation: f64, points: &[&Vector]) {
        self.samples += 1;
        if violation > self.max_violation || violation.is_nan() {
            self.max_violation = violation;
            self.witness = Some(points.iter().map(|p| p.iter().copied().collect()).collect());
        }
    }

    fn finish(mut self, tol: f64) -> Self {
        self.passed = self.max_violation <= tol;
        if self.passed {
            self.witness = None;
        }
        self
    }
}

/// Grid used by [`brute_force_prox`]: `points` per axis on the box
/// `center ± half_width`, then `refinements` zooms onto the near-optimal
/// region of the previous round.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub center: Option<Vector>,
    pub half_width: f64,
    pub points: usize,
    /// Zoom rounds after the first grid.
    pub refinements: usize,
    /// Keep zooming (up to [`MAX_GRID_ROUNDS`]) until the realised step is
    /// at most this.
    pub target_step: Option<f64>,
}

/// Hard cap on grid rounds when a target step is set.
pub const MAX_GRID_ROUNDS: usize = 12;

/// Minimizer found by [`brute_force_prox_detailed`] and the spacing of the
/// last grid, i.e. the accuracy of the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub point: Vector,
    pub step: f64,
}

impl GridSpec {
    /// Default budget: 201 points per axis, two refinement rounds, centred at `x`.
    pub fn new(half_width: f64) -> Self {
        GridSpec {
            center: None,
            half_width,
            points: 201,
            refinements: 2,
            target_step: None,
        }
    }

    pub fn centered(mut self, center: Vector) -> Self {
        self.center = Some(center);
        self
    }

    pub fn with_refinements(mut self, refinements: usize) -> Self {
        self.refinements = refinements;
        self
    }

    pub fn with_target_step(mut self, step: f64) -> Self {
        self.target_step = Some(step);
        self
    }

    /// Spacing of the last grid when every zoom is the minimal `±1` step.
    pub fn final_step(&self) -> f64 {
        let ratio = 2.0 / (self.points as f64 - 1.0);
        let mut w = self.half_width;
        for _ in 0..self.refinements {
            w *= ratio;
        }
        w * ratio
    }
}

/// Grid minimization of `f(y) + ‖x − y‖²/(2γ)` for `dim ≤ 2`.
///
/// Each refinement zooms onto the bounding box (plus one step) of the grid
/// points whose objective lies strictly within `δ` of the best, `δ` being the
/// largest finite rise from the best point to its lattice neighbours; for a
/// well-conditioned objective that box is the best point alone. Zooming onto
/// `argmin ± 1 step` alone loses the minimizer whenever the objective is
/// nearly flat along some direction, e.g. next to a kink or along a curved
/// boundary, where the best lattice point may lie many steps away.
pub fn brute_force_prox<F>(value: F, gamma: f64, x: &Vector, grid: &GridSpec) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<f64>,
{
    Ok(brute_force_prox_detailed(value, gamma, x, grid)?.point)
}

/// [`brute_force_prox`] together with the realised accuracy.
pub fn brute_force_prox_detailed<F>(
    value: F,
    gamma: f64,
    x: &Vector,
    grid: &GridSpec,
) -> Result<GridMinimum>
where
    F: Fn(&Vector) -> Result<f64>,
{
    check_gamma(gamma)?;
    let dim = x.len();
    if dim == 0 || dim > 2 {
        return Err(Error::Unsupported(format!(
            "grid oracle needs dimension 1 or 2, got {dim}"
        )));
    }
    if grid.points < 3 || !(grid.half_width > 0.0) {
        return Err(Error::param("grid", "needs >= 3 points and a positive width"));
    }
    if let Some(c) = &grid.center {
        check_dim(dim, c.len())?;
    }
    let n = grid.points;
    let mut center: Vec<f64> = grid.center.as_ref().unwrap_or(x).iter().copied().collect();
    let mut half = vec![grid.half_width; dim];
    let mut best_point = None;
    let mut last_step = f64::INFINITY;
    let mut round = 0;
    loop {
        let done = round > grid.refinements
            && grid.target_step.is_none_or(|t| last_step <= t || round >= MAX_GRID_ROUNDS);
        if done {
            break;
        }
        round += 1;
        let step: Vec<f64> = half.iter().map(|h| 2.0 * h / (n as f64 - 1.0)).collect();
        last_step = step.iter().fold(0.0f64, |a, b| a.max(*b));
        let coord = |axis: usize, k: usize| center[axis] - half[axis] + step[axis] * k as f64;
        let (rows, cols) = if dim == 1 { (n, 1) } else { (n, n) };
        let mut obj = vec![f64::INFINITY; rows * cols];
        let mut best: Option<(f64, usize)> = None;
        for i in 0..rows {
            for j in 0..cols {
                let y = if dim == 1 {
                    Vector::from_element(1, coord(0, i))
                } else {
                    Vector::from_column_slice(&[coord(0, i), coord(1, j)])
                };
                let o = value(&y)? + (x - &y).norm_squared() / (2.0 * gamma);
                let k = i * cols + j;
                obj[k] = o;
                if o.is_finite() && best.is_none_or(|(b, _)| o < b) {
                    best = Some((o, k));
                }
            }
        }
        let Some((best_obj, best_k)) = best else {
            return Err(Error::Precondition(
                "objective is +∞ on the whole grid".into(),
            ));
        };
        let (bi, bj) = (best_k / cols, best_k % cols);
        let mut delta = 0.0f64;
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let (i, j) = (bi as i64 + di, bj as i64 + dj);
                if i < 0 || j < 0 || i >= rows as i64 || j >= cols as i64 {
                    continue;
                }
                let o = obj[i as usize * cols + j as usize];
                if o.is_finite() {
                    delta = delta.max(o - best_obj);
                }
            }
        }
        let (mut lo, mut hi) = ([bi, bj], [bi, bj]);
        for (k, o) in obj.iter().enumerate() {
            if *o < best_obj + delta {
                let idx = [k / cols, k % cols];
                for a in 0..2 {
                    lo[a] = lo[a].min(idx[a]);
                    hi[a] = hi[a].max(idx[a]);
                }
            }
        }
        let found: Vec<f64> = (0..dim).map(|a| coord(a, [bi, bj][a])).collect();
        let next_center: Vec<f64> = (0..dim)
            .map(|a| 0.5 * (coord(a, lo[a]) + coord(a, hi[a])))
            .collect();
        half = (0..dim)
            .map(|a| 0.5 * (hi[a] - lo[a]) as f64 * step[a] + step[a])
            .collect();
        center = next_center;
        best_point = Some(found);
    }
    Ok(GridMinimum {
        point: Vector::from_vec(best_point.expect("at least one round")),
        step: last_step,
    })
}

/// `(Id + γQ)⁻¹(x − γb)` by LU.
pub fn quadratic_prox_oracle(q: &Matrix, b: &Vector, gamma: f64, x: &Vector) -> Result<Vector> {
    check_gamma(gamma)?;
    let n = x.len();
    check_dim(n, b.len())?;
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: q.nrows(),
        });
    }
    solve(&(Matrix::identity(n, n) + q * gamma), &(x - b * gamma))
}

/// `‖Tx − Ty‖² + ‖(Id−T)x − (Id−T)y‖² − ‖x − y‖²` over sampled pairs; half
/// of them independent, half close together.
pub fn check_firmly_nonexpansive<T>(t: T, dim: usize, s: &Sampler) -> Result<Report>
where
    T: Fn(&Vector) -> Result<Vector>,
{
    let mut rng = s.rng();
    let mut report = Report::new("firm_nonexpansive");
    for k in 0..s.count {
        let x = s.point(&mut rng, dim);
        let y = if k % 2 == 0 {
            s.point(&mut rng, dim)
        } else {
            &x + ball_point(&mut rng, dim, 1e-2 * s.radius)
        };
        let (tx, ty) = (t(&x)?, t(&y)?);
        let d = &tx - &ty;
        let e = (&x - &tx) - (&y - &ty);
        let v = d.norm_squared() + e.norm_squared() - (&x - &y).norm_squared();
        report.record(v, &[&x, &y]);
    }
    Ok(report.finish(PREDICATE_TOLERANCE))
}

/// Searches cycles `x₁ → … → x_m → x₁` for a violation of
/// `Σ⟨xᵢ − Txᵢ, Txᵢ − Tx_{i+1}⟩ ≥ 0` and stops at the first one.
///
/// Even-numbered draws are i.i.d. cycles of length 2–4. Odd-numbered draws
/// (when `max_cycle ≥ 3`) are polygons inscribed in a random ellipse in a
/// random plane, of length up to `max_cycle`: a linear map whose skew part
/// is small relative to its symmetric part only violates the inequality on
/// such slowly turning cycles, which i.i.d. points essentially never form.
pub fn check_cyclically_monotone<T>(t: T, dim: usize, max_cycle: usize, s: &Sampler) -> Result<Report>
where
    T: Fn(&Vector) -> Result<Vector>,
{
    if max_cycle < 2 {
        return Err(Error::param("max_cycle", "must be at least 2"));
    }
    let mut rng = s.rng();
    let mut report = Report::new("cyclic_monotone");
    let short = max_cycle.min(4);
    for k in 0..s.count {
        let xs: Vec<Vector> = if k % 2 == 1 && max_cycle >= 3 {
            let m = rng.random_range(3..=max_cycle);
            polygon_cycle(&mut rng, dim, m, s.radius)
        } else {
            let m = rng.random_range(2..=short);
            (0..m).map(|_| s.point(&mut rng, dim)).collect()
        };
        let m = xs.len();
        let txs = xs.iter().map(&t).collect::<Result<Vec<_>>>()?;
        let sum: f64 = (0..m)
            .map(|i| (&xs[i] - &txs[i]).dot(&(&txs[i] - &txs[(i + 1) % m])))
            .sum();
        let refs: Vec<&Vector> = xs.iter().collect();
        report.record(-sum, &refs);
        if -sum > PREDICATE_TOLERANCE {
            break;
        }
    }
    Ok(report.finish(PREDICATE_TOLERANCE))
}

fn polygon_cycle<R: Rng>(rng: &mut R, dim: usize, m: usize, radius: f64) -> Vec<Vector> {
    let center = ball_point(rng, dim, 0.5 * radius);
    let u = ball_point(rng, dim, 1.0);
    let u = if u.norm() > 0.0 { &u / u.norm() } else { u };
    let mut w = ball_point(rng, dim, 1.0);
    w -= &u * u.dot(&w);
    let w = if w.norm() > 1e-8 { &w / w.norm() } else { w * 0.0 };
    let (a, b) = (0.5 * radius * rng.random::<f64>(), 0.5 * radius * rng.random::<f64>());
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    let turn = if rng.random::<bool>() { 1.0 } else { -1.0 };
    (0..m)
        .map(|i| {
            let th = phase + turn * std::f64::consts::TAU * i as f64 / m as f64;
            &center + &u * (a * th.cos()) + &w * (b * th.sin())
        })
        .collect()
}

/// Largest `‖T₁x − T₂x‖` over samples.
pub fn check_identity<A, B>(t1: A, t2: B, dim: usize, s: &Sampler, tol: f64) -> Result<Report>
where
    A: Fn(&Vector) -> Result<Vector>,
    B: Fn(&Vector) -> Result<Vector>,
{
    let mut report = Report::new("identity");
    for x in s.points(dim) {
        let (a, b) = (t1(&x)?, t2(&x)?);
        check_dim(a.len(), b.len())?;
        report.record((a - b).norm(), &[&x]);
    }
    Ok(report.finish(tol))
}

/// Central finite differences against the supplied gradient; the violation
/// is `‖fd − ∇h‖/(1 + ‖∇h‖)`.
pub fn check_gradient<V, G>(value: V, gradient: G, dim: usize, s: &Sampler) -> Result<Report>
where
    V: Fn(&Vector) -> Result<f64>,
    G: Fn(&Vector) -> Result<Vector>,
{
    let mut report = Report::new("gradient");
    for x in s.points(dim) {
        let g = gradient(&x)?;
        check_dim(dim, g.len())?;
        let mut fd = Vector::zeros(dim);
        for i in 0..dim {
            let h = 1e-6 * x[i].abs().max(1.0);
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += h;
            b[i] -= h;
            fd[i] = (value(&a)? - value(&b)?) / (2.0 * h);
        }
        report.record((&fd - &g).norm() / (1.0 + g.norm()), &[&x]);
    }
    Ok(report.finish(GRADIENT_TOLERANCE))
}

/// Sampled difference quotients `‖Gx − Gy‖/‖x − y‖` against `lipschitz`;
/// the violation is the excess over `lipschitz·(1 + 1e−6)`.
pub fn audit_lipschitz<G>(map: G, lipschitz: f64, dim: usize, s: &Sampler) -> Result<Report>
where
    G: Fn(&Vector) -> Result<Vector>,
{
    let mut rng = s.rng();
    let mut report = Report::new("lipschitz");
    for _ in 0..s.count {
        let x = s.point(&mut rng, dim);
        let y = s.point(&mut rng, dim);
        let d = (&x - &y).norm();
        if d == 0.0 {
            continue;
        }
        let q = (map(&x)? - map(&y)?).norm() / d;
        report.record(q - lipschitz * (1.0 + 1e-6), &[&x, &y]);
    }
    Ok(report.finish(0.0))
}
