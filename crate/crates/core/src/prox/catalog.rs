use std::sync::Arc;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::transform::{self, CompositeTerm, TransformSpec};
use super::ProxFn;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{is_psd, matrix_from_rows, LinOp, Matrix, Vector};
use crate::sets::{ConvexSet, SetSpec, MEMBERSHIP_TOLERANCE};

fn one() -> f64 {
    1.0
}

/// Even convex function on the real line, used through `φ∘‖·‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Phi {
    /// `w|t|`
    Abs {
        #[serde(default = "one")]
        weight: f64,
    },
    /// `ι_{[−r, r]}`
    Interval { radius: f64 },
    /// `w t²/2`
    Square {
        #[serde(default = "one")]
        weight: f64,
    },
    /// `w·max(|t| − r, 0)`
    Deadzone { weight: f64, radius: f64 },
}

impl Phi {
    pub fn validate(&self) -> Result<()> {
        let ok = |name: &'static str, v: f64, strict: bool| {
            if v.is_finite() && (v > 0.0 || (!strict && v == 0.0)) {
                Ok(())
            } else {
                Err(Error::param(name, format!("invalid value {v}")))
            }
        };
        match *self {
            Phi::Abs { weight } => ok("weight", weight, false),
            Phi::Interval { radius } => ok("radius", radius, false),
            Phi::Square { weight } => ok("weight", weight, true),
            Phi::Deadzone { weight, radius } => {
                ok("weight", weight, false)?;
                ok("radius", radius, false)
            }
        }
    }

    /// Largest minimizer of `φ` (the minimizers form a symmetric interval).
    pub fn max_argmin(&self) -> f64 {
        match *self {
            Phi::Abs { .. } | Phi::Square { .. } => 0.0,
            Phi::Interval { radius } | Phi::Deadzone { radius, .. } => radius,
        }
    }

    /// `prox_{γφ}(t)`.
    pub fn prox(&self, gamma: f64, t: f64) -> f64 {
        match *self {
            Phi::Abs { weight } => soft_threshold(t, gamma * weight),
            Phi::Interval { radius } => t.clamp(-radius, radius),
            Phi::Square { weight } => t / (1.0 + gamma * weight),
            Phi::Deadzone { weight, radius } => {
                let a = t.abs();
                if a <= radius {
                    t
                } else if a <= radius + gamma * weight {
                    radius.copysign(t)
                } else {
                    t - (gamma * weight).copysign(t)
                }
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Phi::Abs { weight } => weight * t.abs(),
            Phi::Interval { radius } => interval_indicator(t, radius),
            Phi::Square { weight } => 0.5 * weight * t * t,
            Phi::Deadzone { weight, radius } => weight * (t.abs() - radius).max(0.0),
        }
    }

    pub fn conjugate(&self, s: f64) -> f64 {
        match *self {
            Phi::Abs { weight } => interval_indicator(s, weight),
            Phi::Interval { radius } => radius * s.abs(),
            Phi::Square { weight } => 0.5 * s * s / weight,
            Phi::Deadzone { weight, radius } => radius * s.abs() + interval_indicator(s, weight),
        }
    }
}

fn interval_indicator(t: f64, radius: f64) -> f64 {
    if t.abs() <= radius + MEMBERSHIP_TOLERANCE * (1.0 + t.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

pub(crate) fn soft_threshold(t: f64, tau: f64) -> f64 {
    if t > tau {
        t - tau
    } else if t < -tau {
        t + tau
    } else {
        0.0
    }
}

fn zero_indicator(u: &Vector) -> f64 {
    if u.norm() <= MEMBERSHIP_TOLERANCE {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `f(x) = ½⟨Qx, x⟩ + ⟨b, x⟩` with `Q` symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    q: Matrix,
    b: Vector,
    eigen: Arc<SymmetricEigen<f64, nalgebra::Dyn>>,
}

impl Quadratic {
    pub fn new(q: Matrix, b: Option<Vector>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::param("q", "must be square"));
        }
        let n = q.nrows();
        let b = b.unwrap_or_else(|| Vector::zeros(n));
        check_dim(n, b.len())?;
        if (&q - q.transpose()).amax() > 1e-12 * (1.0 + q.amax()) {
            return Err(Error::param("q", "must be symmetric"));
        }
        if !is_psd(&q) {
            return Err(Error::param("q", "must be positive semidefinite"));
        }
        let eigen = Arc::new(SymmetricEigen::new(q.clone()));
        Ok(Quadratic { q, b, eigen })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    /// `(Id + γQ)⁻¹(x − γb)` by Cholesky.
    pub fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        let n = self.dim();
        let m = Matrix::identity(n, n) + &self.q * gamma;
        let rhs = x - &self.b * gamma;
        let chol = m.cholesky().ok_or(Error::Singular)?;
        Ok(chol.solve(&rhs))
    }

    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.b.dot(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.q * x + &self.b
    }

    /// `f*(u) = ½⟨Q⁺(u−b), u−b⟩` when `u − b ∈ ran Q`, `+∞` otherwise.
    pub fn conjugate(&self, u: &Vector) -> f64 {
        let d = u - &self.b;
        let c = self.eigen.eigenvectors.tr_mul(&d);
        let scale = 1.0 + self.q.amax();
        let tol = MEMBERSHIP_TOLERANCE * (1.0 + d.norm());
        let mut total = 0.0;
        for (ci, li) in c.iter().zip(self.eigen.eigenvalues.iter()) {
            if *li > 1e-12 * scale {
                total += 0.5 * ci * ci / li;
            } else if ci.abs() > tol {
                return f64::INFINITY;
            }
        }
        total
    }

    pub fn prox_fn(&self) -> ProxFn {
        let (a, b, c) = (self.clone(), self.clone(), self.clone());
        ProxFn::new("quadratic", Some(self.dim()), move |g, x| a.prox(g, x))
            .with_value(move |x| Ok(b.value(x)))
            .with_conjugate_value(move |u| Ok(c.conjugate(u)))
    }
}

/// One summand of a convex combination of proximity operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedProx {
    pub weight: f64,
    pub prox: ProxSpec,
}

/// One summand `ω L*∘prox∘L` of a composite average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedTerm {
    pub weight: f64,
    pub matrix: Vec<Vec<f64>>,
    pub inner: ProxSpec,
}

/// Grammar of proximity operators in problem files:
/// `{"kind": "...", "params": {...}}`, with combinators nesting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProxSpec {
    Zero {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Quadratic {
        q: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
    },
    L1 {
        #[serde(default = "one")]
        weight: f64,
    },
    L2Norm {
        #[serde(default = "one")]
        weight: f64,
    },
    Indicator {
        set: SetSpec,
    },
    Support {
        set: SetSpec,
    },
    /// `φ∘‖·‖`
    Radial {
        phi: Phi,
    },
    /// `φ∘‖·‖ + σ_C`
    RadialPlusSupport {
        phi: Phi,
        set: SetSpec,
    },
    /// `w‖·‖ + ι_K` for a closed convex cone `K`.
    NormPlusConeIndicator {
        #[serde(default = "one")]
        weight: f64,
        cone: SetSpec,
    },
    /// `ι_{B(0;r) ∩ K}` for a closed convex cone `K`.
    BallConeIndicator {
        radius: f64,
        cone: SetSpec,
    },
    Complement {
        of: Box<ProxSpec>,
    },
    Translate {
        of: Box<ProxSpec>,
        shift: Vec<f64>,
    },
    Reflect {
        of: Box<ProxSpec>,
    },
    ResolventOf {
        of: Box<ProxSpec>,
    },
    Underrelax {
        of: Box<ProxSpec>,
        lambda: f64,
    },
    ConvexCombination {
        terms: Vec<WeightedProx>,
    },
    ConjugateBy {
        of: Box<ProxSpec>,
        matrix: Vec<Vec<f64>>,
    },
    ParallelComposition {
        matrix: Vec<Vec<f64>>,
        of: Box<ProxSpec>,
    },
    CompositeAverage {
        terms: Vec<WeightedTerm>,
    },
    SumOfProjectors {
        first: SetSpec,
        second: SetSpec,
    },
    #[serde(rename = "compose_1d")]
    Compose1d {
        outer: Box<ProxSpec>,
        inner: Box<ProxSpec>,
    },
}

fn check_weight(weight: f64) -> Result<()> {
    if weight.is_finite() && weight >= 0.0 {
        Ok(())
    } else {
        Err(Error::param("weight", format!("must be finite and >= 0, got {weight}")))
    }
}

fn require_cone(set: &ConvexSet) -> Result<()> {
    if set.is_cone() {
        Ok(())
    } else {
        Err(Error::Precondition("`cone` must be a closed convex cone".into()))
    }
}

impl ProxSpec {
    pub fn build(&self) -> Result<ProxFn> {
        match self {
            ProxSpec::Zero { dim } => Ok(zero(*dim)),
            ProxSpec::Quadratic { q, b } => {
                let q = matrix_from_rows(q)?;
                let b = b.as_ref().map(|b| Vector::from_column_slice(b));
                Ok(Quadratic::new(q, b)?.prox_fn())
            }
            ProxSpec::L1 { weight } => l1(*weight),
            ProxSpec::L2Norm { weight } => l2_norm(*weight),
            ProxSpec::Indicator { set } => Ok(indicator(set.build()?)),
            ProxSpec::Support { set } => Ok(support(set.build()?)),
            ProxSpec::Radial { phi } => radial(phi.clone()),
            ProxSpec::RadialPlusSupport { phi, set } => {
                radial_plus_support(phi.clone(), set.build()?)
            }
            ProxSpec::NormPlusConeIndicator { weight, cone } => {
                norm_plus_cone_indicator(*weight, cone.build()?)
            }
            ProxSpec::BallConeIndicator { radius, cone } => {
                ball_cone_indicator(*radius, cone.build()?)
            }
            ProxSpec::Complement { of } => Ok(transform::moreau_complement(&of.build()?)),
            ProxSpec::Translate { of, shift } => transform::prox_transform(
                &of.build()?,
                TransformSpec::Translate(crate::linalg::vector(shift)?),
            ),
            ProxSpec::Reflect { of } => {
                transform::prox_transform(&of.build()?, TransformSpec::Reflect)
            }
            ProxSpec::ResolventOf { of } => {
                transform::prox_transform(&of.build()?, TransformSpec::ResolventOf)
            }
            ProxSpec::Underrelax { of, lambda } => {
                transform::prox_transform(&of.build()?, TransformSpec::Underrelax(*lambda))
            }
            ProxSpec::ConvexCombination { terms } => {
                let built = terms
                    .iter()
                    .map(|t| Ok((t.weight, t.prox.build()?)))
                    .collect::<Result<Vec<_>>>()?;
                transform::convex_combination(&built)
            }
            ProxSpec::ConjugateBy { of, matrix } => transform::prox_transform(
                &of.build()?,
                TransformSpec::ConjugateBy(LinOp::from_rows(matrix)?),
            ),
            ProxSpec::ParallelComposition { matrix, of } => match of.as_ref() {
                ProxSpec::Quadratic { q, b } => {
                    let quad = Quadratic::new(
                        matrix_from_rows(q)?,
                        b.as_ref().map(|b| Vector::from_column_slice(b)),
                    )?;
                    transform::parallel_composition(&LinOp::from_rows(matrix)?, &quad)
                }
                ProxSpec::Zero { dim } => {
                    let m = LinOp::from_rows(matrix)?;
                    let n = dim.unwrap_or(m.cols());
                    let quad = Quadratic::new(Matrix::zeros(n, n), None)?;
                    transform::parallel_composition(&m, &quad)
                }
                _ => Err(Error::Unsupported(
                    "parallel composition is only available for quadratic functions".into(),
                )),
            },
            ProxSpec::CompositeAverage { terms } => {
                let built = terms
                    .iter()
                    .map(|t| {
                        Ok(CompositeTerm {
                            weight: t.weight,
                            op: LinOp::from_rows(&t.matrix)?,
                            inner: t.inner.build()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                transform::composite_average(built)
            }
            ProxSpec::SumOfProjectors { first, second } => {
                transform::prox_sum_projectors(&first.build()?, &second.build()?)
            }
            ProxSpec::Compose1d { outer, inner } => {
                transform::prox_compose_1d(&outer.build()?, &inner.build()?)
            }
        }
    }
}

/// Build the function described by `spec` and evaluate `prox_{γf}(x)`.
pub fn prox_eval(spec: &ProxSpec, gamma: f64, x: &Vector) -> Result<Vector> {
    spec.build()?.prox(gamma, x)
}

pub fn zero(dim: Option<usize>) -> ProxFn {
    ProxFn::new("zero", dim, |_, x| Ok(x.clone()))
        .with_value(|_| Ok(0.0))
        .with_conjugate_value(|u| Ok(zero_indicator(u)))
}

pub fn l1(weight: f64) -> Result<ProxFn> {
    check_weight(weight)?;
    Ok(ProxFn::new("l1", None, move |g, x| {
        Ok(x.map(|t| soft_threshold(t, g * weight)))
    })
    .with_value(move |x| Ok(weight * x.lp_norm(1)))
    .with_conjugate_value(move |u| Ok(interval_indicator(u.amax(), weight))))
}

pub fn l2_norm(weight: f64) -> Result<ProxFn> {
    check_weight(weight)?;
    Ok(ProxFn::new("l2_norm", None, move |g, x| {
        let n = x.norm();
        let tau = g * weight;
        Ok(if n > tau { x * ((n - tau) / n) } else { x * 0.0 })
    })
    .with_value(move |x| Ok(weight * x.norm()))
    .with_conjugate_value(move |u| Ok(interval_indicator(u.norm(), weight))))
}

pub fn indicator(set: ConvexSet) -> ProxFn {
    let dim = set.dim();
    let (a, b, c) = (set.clone(), set.clone(), set);
    ProxFn::new("indicator", Some(dim), move |_, x| a.project(x))
        .with_value(move |x| b.indicator(x))
        .with_conjugate_value(move |u| c.support(u))
}

/// `prox_{γσ_C}(x) = x − γ proj_C(x/γ)`.
pub fn support(set: ConvexSet) -> ProxFn {
    let dim = set.dim();
    let (a, b, c) = (set.clone(), set.clone(), set);
    ProxFn::new("support", Some(dim), move |g, x| {
        Ok(x - a.project(&(x / g))? * g)
    })
    .with_value(move |x| b.support(x))
    .with_conjugate_value(move |u| c.indicator(u))
}

fn radial_scale(phi: &Phi, gamma: f64, r: &Vector) -> Vector {
    let d = r.norm();
    if d > phi.max_argmin() {
        r * (phi.prox(gamma, d) / d)
    } else {
        r.clone()
    }
}

pub fn radial(phi: Phi) -> Result<ProxFn> {
    phi.validate()?;
    let (a, b, c) = (phi.clone(), phi.clone(), phi);
    Ok(ProxFn::new("radial", None, move |g, x| Ok(radial_scale(&a, g, x)))
        .with_value(move |x| Ok(b.value(x.norm())))
        .with_conjugate_value(move |u| Ok(c.conjugate(u.norm()))))
}

/// `φ∘‖·‖ + σ_C`: scale `x − proj_C x` radially through `prox_φ`.
pub fn radial_plus_support(phi: Phi, set: ConvexSet) -> Result<ProxFn> {
    phi.validate()?;
    let dim = set.dim();
    let (a, sa) = (phi.clone(), set.clone());
    let (b, sb) = (phi, set);
    Ok(
        ProxFn::new("radial_plus_support", Some(dim), move |g, x| {
            // γσ_C = σ_{γC}
            let residual = x - sa.project(&(x / g))? * g;
            Ok(radial_scale(&a, g, &residual))
        })
        .with_value(move |x| Ok(b.value(x.norm()) + sb.support(x)?)),
    )
}

pub fn norm_plus_cone_indicator(weight: f64, cone: ConvexSet) -> Result<ProxFn> {
    check_weight(weight)?;
    require_cone(&cone)?;
    let dim = cone.dim();
    let polar = cone.polar()?;
    let (a, b) = (cone.clone(), cone);
    Ok(ProxFn::new("norm_plus_cone_indicator", Some(dim), move |g, x| {
        let p = a.project(x)?;
        let n = p.norm();
        let tau = g * weight;
        Ok(if n > tau { &p * ((n - tau) / n) } else { p * 0.0 })
    })
    .with_value(move |x| Ok(weight * x.norm() + b.indicator(x)?))
    // (w‖·‖ + ι_K)* = ι_{B(0;w) + K°}
    .with_conjugate_value(move |u| Ok(interval_indicator(polar.distance(u)?, weight))))
}

pub fn ball_cone_indicator(radius: f64, cone: ConvexSet) -> Result<ProxFn> {
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::param("radius", format!("must be >= 0, got {radius}")));
    }
    require_cone(&cone)?;
    let dim = cone.dim();
    let polar = cone.polar()?;
    let (a, b) = (cone.clone(), cone);
    Ok(ProxFn::new("ball_cone_indicator", Some(dim), move |_, x| {
        let p = a.project(x)?;
        let n = p.norm();
        Ok(if n > radius { &p * (radius / n) } else { p })
    })
    .with_value(move |x| Ok(interval_indicator(x.norm(), radius) + b.indicator(x)?))
    // σ_{B(0;r) ∩ K} = r·d_{K°}
    .with_conjugate_value(move |u| Ok(radius * polar.distance(u)?)))
}
