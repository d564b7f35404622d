use super::ProxFn;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{is_psd, LinOp, Matrix, Vector};
use crate::resolvent::{damped_resolvent, forward_resolvent, rescale_unit_resolvent, DAMPED_MAX_ITER};
use crate::sets::ConvexSet;

use super::catalog::Quadratic;

const NORM_SLACK: f64 = 1e-9;
const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

/// Transformations that map a proximity operator to another one.
#[derive(Debug, Clone)]
pub enum TransformSpec {
    /// `x ↦ z + T(x − z)`
    Translate(Vector),
    /// `x ↦ −T(−x)`
    Reflect,
    /// `J_T = (Id + T)⁻¹`
    ResolventOf,
    /// `Id + λ(T − Id)` with `λ ∈ (0, 1)`
    Underrelax(f64),
    /// `ω₀T + Σ ωᵢTᵢ`; `weights[0]` multiplies `T`.
    ConvexCombination {
        weights: Vec<f64>,
        partners: Vec<ProxFn>,
    },
    /// `L*∘T∘L` with `‖L‖ ≤ 1`
    ConjugateBy(LinOp),
}

pub fn prox_transform(t: &ProxFn, spec: TransformSpec) -> Result<ProxFn> {
    match spec {
        TransformSpec::Translate(z) => translate(t, z),
        TransformSpec::Reflect => Ok(reflect(t)),
        TransformSpec::ResolventOf => Ok(resolvent_of(t)),
        TransformSpec::Underrelax(lambda) => underrelax(t, lambda),
        TransformSpec::ConvexCombination { weights, partners } => {
            if weights.len() != partners.len() + 1 {
                return Err(Error::param(
                    "weights",
                    format!("expected {} weights, got {}", partners.len() + 1, weights.len()),
                ));
            }
            let mut terms = vec![(weights[0], t.clone())];
            terms.extend(weights[1..].iter().copied().zip(partners));
            convex_combination(&terms)
        }
        TransformSpec::ConjugateBy(l) => conjugate_by(t, l),
    }
}

/// `prox_{γf*}(x) = x − γ prox_{f/γ}(x/γ)`.
pub fn moreau_complement(t: &ProxFn) -> ProxFn {
    let inner = t.raw();
    ProxFn::new(format!("complement({})", t.label()), t.dim(), move |g, x| {
        Ok(x - inner(1.0 / g, &(x / g))? * g)
    })
    .with_lipschitz(Some(1.0))
    .with_value_maps(t.conjugate_map(), t.value_map())
}

pub fn translate(t: &ProxFn, z: Vector) -> Result<ProxFn> {
    if let Some(d) = t.dim() {
        check_dim(d, z.len())?;
    }
    let inner = t.raw();
    let (zv, zc, zp) = (z.clone(), z.clone(), z);
    let value = t.value_map().map(|f| {
        Box::new(move |x: &Vector| f(&(x - &zv))) as Box<dyn Fn(&Vector) -> Result<f64> + Send + Sync>
    });
    let conj = t.conjugate_map().map(|f| {
        Box::new(move |u: &Vector| Ok(f(u)? + u.dot(&zc)))
            as Box<dyn Fn(&Vector) -> Result<f64> + Send + Sync>
    });
    let mut out = ProxFn::new(format!("translate({})", t.label()), Some(zp.len()), move |g, x| {
        check_dim(zp.len(), x.len())?;
        Ok(&zp + inner(g, &(x - &zp))?)
    })
    .with_lipschitz(t.lipschitz_of_prox());
    if let Some(v) = value {
        out = out.with_value(v);
    }
    if let Some(c) = conj {
        out = out.with_conjugate_value(c);
    }
    Ok(out)
}

pub fn reflect(t: &ProxFn) -> ProxFn {
    let inner = t.raw();
    let mut out = ProxFn::new(format!("reflect({})", t.label()), t.dim(), move |g, x| {
        Ok(-inner(g, &(-x))?)
    })
    .with_lipschitz(t.lipschitz_of_prox());
    if let Some(f) = t.value_map() {
        out = out.with_value(move |x| f(&(-x)));
    }
    if let Some(f) = t.conjugate_map() {
        out = out.with_conjugate_value(move |u| f(&(-u)));
    }
    out
}

/// `J_T` for `T = prox_f`: this is `prox_φ` with `φ = q − env f`, and
/// `φ* = f + q`.
pub fn resolvent_of(t: &ProxFn) -> ProxFn {
    let inner = t.raw();
    let mut out = ProxFn::new(format!("resolvent_of({})", t.label()), t.dim(), move |g, x| {
        let fwd = |p: &Vector| inner(1.0, p);
        if g == 1.0 {
            damped_resolvent(fwd, 1.0, 1.0, x, DAMPED_MAX_ITER)
        } else {
            forward_resolvent(fwd, 1.0, g, x)
        }
    });
    if let Some(f) = t.value_map() {
        let p1 = t.raw();
        out = out.with_value(move |x| {
            let p = p1(1.0, x)?;
            let env = f(&p)? + 0.5 * (x - &p).norm_squared();
            Ok(0.5 * x.norm_squared() - env)
        });
        let f = t.value_map().unwrap();
        out = out.with_conjugate_value(move |u| Ok(f(u)? + 0.5 * u.norm_squared()));
    }
    out
}

/// `Id + λ(prox_h − Id)` is the prox of `F = λ·env_{(1−λ)}h`; for general
/// `γ`, `prox_{γF}(x) = x + (γλ/μ)(prox_{μh}(x) − x)` with `μ = 1 − λ + γλ`.
pub fn underrelax(t: &ProxFn, lambda: f64) -> Result<ProxFn> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param("lambda", format!("must lie in (0, 1), got {lambda}")));
    }
    let inner = t.raw();
    let mut out = ProxFn::new(format!("underrelax({})", t.label()), t.dim(), move |g, x| {
        let mu = 1.0 - lambda + g * lambda;
        let p = inner(mu, x)?;
        Ok(x + (p - x) * (g * lambda / mu))
    });
    if let Some(h) = t.value_map() {
        let p1 = t.raw();
        let mu = 1.0 - lambda;
        out = out.with_value(move |x| {
            let p = p1(mu, x)?;
            Ok(lambda * (h(&p)? + (x - &p).norm_squared() / (2.0 * mu)))
        });
    }
    if let Some(hc) = t.conjugate_map() {
        out = out.with_conjugate_value(move |u| {
            let s = u / lambda;
            Ok(lambda * (hc(&s)? + 0.5 * (1.0 - lambda) * s.norm_squared()))
        });
    }
    Ok(out)
}

fn common_dim(dims: impl Iterator<Item = Option<usize>>) -> Result<Option<usize>> {
    let mut out = None;
    for d in dims.flatten() {
        match out {
            None => out = Some(d),
            Some(e) => check_dim(e, d)?,
        }
    }
    Ok(out)
}

/// `Σ ωᵢ Tᵢ` with weights in the unit simplex.
pub fn convex_combination(terms: &[(f64, ProxFn)]) -> Result<ProxFn> {
    if terms.is_empty() {
        return Err(Error::param("terms", "must not be empty"));
    }
    if terms.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::param("weights", "must be nonnegative"));
    }
    let total: f64 = terms.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > NORM_SLACK {
        return Err(Error::param("weights", format!("must sum to 1, got {total}")));
    }
    let dim = common_dim(terms.iter().map(|(_, t)| t.dim()))?;
    let maps: Vec<(f64, super::ProxMap)> = terms.iter().map(|(w, t)| (*w, t.raw())).collect();
    let label = format!(
        "convex_combination({})",
        terms.iter().map(|(_, t)| t.label()).collect::<Vec<_>>().join(", ")
    );
    let unit = move |x: &Vector| -> Result<Vector> {
        let mut acc = x * 0.0;
        for (w, m) in &maps {
            acc += m(1.0, x)? * *w;
        }
        Ok(acc)
    };
    Ok(ProxFn::new(label, dim, move |g, x| rescale_unit_resolvent(&unit, g, x)))
}

fn checked_norm(l: &LinOp) -> Result<f64> {
    if let Some(b) = l.norm_bound() {
        return Ok(b);
    }
    Ok(l.norm())
}

/// `L*∘T∘L`, a proximity operator on the domain of `L` when `‖L‖ ≤ 1`.
pub fn conjugate_by(t: &ProxFn, l: LinOp) -> Result<ProxFn> {
    if let Some(d) = t.dim() {
        check_dim(d, l.rows())?;
    }
    let norm = checked_norm(&l)?;
    if norm > 1.0 + NORM_SLACK {
        return Err(Error::Precondition(format!(
            "conjugate_by requires ‖L‖ ≤ 1, estimated {norm}"
        )));
    }
    let inner = t.raw();
    let dim = l.cols();
    let unit = move |x: &Vector| -> Result<Vector> { l.adjoint(&inner(1.0, &l.forward(x)?)?) };
    Ok(
        ProxFn::new(format!("conjugate_by({})", t.label()), Some(dim), move |g, x| {
            rescale_unit_resolvent(&unit, g, x)
        })
        .with_lipschitz(Some((norm * norm).min(1.0))),
    )
}

/// `M ▷ prox_f = (M(Id + ∂f)M*)⁻¹` for quadratic `f`; it is the prox of the
/// quadratic `φ = (f + q)∘M* − q`, i.e. `P = M(Q + Id)M* − Id`, `c = Mb`.
pub fn parallel_composition(m: &LinOp, f: &Quadratic) -> Result<ProxFn> {
    check_dim(m.cols(), f.dim())?;
    let md = m.to_dense();
    let k = md.nrows();
    let mmt = &md * md.transpose();
    if !is_psd(&(mmt - Matrix::identity(k, k))) {
        return Err(Error::Precondition(
            "parallel composition requires MM* − Id to be positive semidefinite".into(),
        ));
    }
    let n = f.dim();
    let p = &md * (f.q() + Matrix::identity(n, n)) * md.transpose() - Matrix::identity(k, k);
    let p = (&p + p.transpose()) * 0.5;
    let c = &md * f.b();
    Ok(Quadratic::new(p, Some(c))?
        .prox_fn()
        .with_label("parallel_composition"))
}

/// One summand `ω L*∘T∘L` of [`composite_average`].
#[derive(Debug, Clone)]
pub struct CompositeTerm {
    pub weight: f64,
    pub op: LinOp,
    pub inner: ProxFn,
}

/// `x ↦ Σ ωᵢ Lᵢ*(Tᵢ(Lᵢx))` under the budget `Σ ωᵢ‖Lᵢ‖² ≤ 1`.
pub fn composite_average(terms: Vec<CompositeTerm>) -> Result<ProxFn> {
    if terms.is_empty() {
        return Err(Error::param("terms", "must not be empty"));
    }
    let dim = terms[0].op.cols();
    let mut budget = 0.0;
    for t in &terms {
        if !(t.weight.is_finite() && t.weight > 0.0) {
            return Err(Error::param("weight", format!("must be > 0, got {}", t.weight)));
        }
        check_dim(dim, t.op.cols())?;
        if let Some(d) = t.inner.dim() {
            check_dim(d, t.op.rows())?;
        }
        let n = checked_norm(&t.op)?;
        budget += t.weight * n * n;
    }
    if budget > 1.0 + NORM_SLACK {
        return Err(Error::Precondition(format!(
            "composite average exceeds its budget: Σ ω‖L‖² = {budget} > 1"
        )));
    }
    let parts: Vec<(f64, LinOp, super::ProxMap)> = terms
        .iter()
        .map(|t| (t.weight, t.op.clone(), t.inner.raw()))
        .collect();
    let label = format!(
        "composite_average({})",
        terms.iter().map(|t| t.inner.label()).collect::<Vec<_>>().join(", ")
    );
    let unit = move |x: &Vector| -> Result<Vector> {
        let mut acc = Vector::zeros(dim);
        for (w, l, t) in &parts {
            acc += l.adjoint(&t(1.0, &l.forward(x)?)?)? * *w;
        }
        Ok(acc)
    };
    Ok(ProxFn::new(label, Some(dim), move |g, x| rescale_unit_resolvent(&unit, g, x))
        .with_lipschitz(Some(budget)))
}

/// `proj_{V₁} + proj_{V₂}` for orthogonal subspaces; equals `proj_{V₁+V₂}`.
pub fn prox_sum_projectors(v1: &ConvexSet, v2: &ConvexSet) -> Result<ProxFn> {
    check_dim(v1.dim(), v2.dim())?;
    let p1 = v1.projector_matrix()?;
    let p2 = v2.projector_matrix()?;
    if (&p1 * &p2).amax() > ORTHOGONALITY_TOLERANCE {
        return Err(Error::Precondition(
            "sum of projectors requires mutually orthogonal subspaces".into(),
        ));
    }
    let sum = p1 + p2;
    // P² = P and P symmetric: an orthogonal projector, onto V₁ + V₂.
    if (&sum * &sum - &sum).amax() > ORTHOGONALITY_TOLERANCE {
        return Err(Error::Precondition("sum of projectors is not a projector".into()));
    }
    let n = v1.dim();
    let (a, b, c) = (sum.clone(), sum.clone(), sum);
    let ident = Matrix::identity(n, n);
    let member = move |m: &Matrix, x: &Vector| {
        let r = (x - m * x).norm();
        if r <= crate::sets::MEMBERSHIP_TOLERANCE * (1.0 + x.norm()) {
            0.0
        } else {
            f64::INFINITY
        }
    };
    Ok(ProxFn::new("sum_of_projectors", Some(n), move |_, x| Ok(&a * x))
        .with_value(move |x| Ok(member(&b, x)))
        .with_conjugate_value(move |u| Ok(member(&(&ident - &c), u))))
}

/// `T₁∘T₂` on the real line: a composition of nondecreasing nonexpansive
/// maps is again a proximity operator.
pub fn prox_compose_1d(outer: &ProxFn, inner: &ProxFn) -> Result<ProxFn> {
    for t in [outer, inner] {
        if let Some(d) = t.dim() {
            check_dim(1, d)?;
        }
    }
    let (o, i) = (outer.raw(), inner.raw());
    let unit = move |x: &Vector| -> Result<Vector> {
        check_dim(1, x.len())?;
        o(1.0, &i(1.0, x)?)
    };
    // re-verify on a symmetric grid that the composition is increasing and
    // nonexpansive
    let mut prev: Option<(f64, f64)> = None;
    for k in -2000..=2000 {
        let x = k as f64 * 0.05;
        let y = unit(&Vector::from_element(1, x))?[0];
        if let Some((px, py)) = prev {
            let dy = y - py;
            if dy < -1e-12 || dy > (x - px) + 1e-12 {
                return Err(Error::Precondition(format!(
                    "composition is not increasing and nonexpansive near x = {x}"
                )));
            }
        }
        prev = Some((x, y));
    }
    Ok(ProxFn::new(
        format!("compose_1d({}, {})", outer.label(), inner.label()),
        Some(1),
        move |g, x| rescale_unit_resolvent(&unit, g, x),
    ))
}

impl ProxFn {
    fn with_value_maps(
        mut self,
        value: Option<super::ValueMap>,
        conjugate: Option<super::ValueMap>,
    ) -> Self {
        self.value = value;
        self.conjugate_value = conjugate;
        self
    }
}
