//! Operators attached to convex-concave saddle problems.

use serde::{Deserialize, Serialize};

use super::MonotoneOp;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{is_psd, matrix_from_rows, LinOp, Matrix, Vector};
use crate::oracle::{audit_lipschitz, Sampler};
use crate::prox::{moreau_complement, ProxFn, ProxSpec};
use crate::smooth::{SmoothSpec, SmoothTerm};

/// Data of `min_x f(x) + h(x) + (g□ℓ)(Lx)` with `∇h` `μ`-Lipschitz and
/// `∇ℓ*` `ν`-Lipschitz.
#[derive(Debug, Clone)]
pub struct SaddleSpec {
    pub f: ProxFn,
    pub g: ProxFn,
    pub h: SmoothTerm,
    pub ell_star: SmoothTerm,
    pub l: LinOp,
}

fn check_opt_dim(expected: usize, found: Option<usize>) -> Result<()> {
    match found {
        Some(d) => check_dim(expected, d),
        None => Ok(()),
    }
}

impl SaddleSpec {
    /// Validates dimensions and audits both gradient Lipschitz constants on
    /// sampled difference quotients.
    pub fn new(f: ProxFn, g: ProxFn, h: SmoothTerm, ell_star: SmoothTerm, l: LinOp) -> Result<Self> {
        let (n, k) = (l.cols(), l.rows());
        check_opt_dim(n, f.dim())?;
        check_opt_dim(n, h.dim())?;
        check_opt_dim(k, g.dim())?;
        check_opt_dim(k, ell_star.dim())?;
        let sampler = Sampler::new(0x005a_dd1e, 500, 10.0);
        for (term, dim, name) in [(&h, n, "h"), (&ell_star, k, "ell_star")] {
            let report = audit_lipschitz(|x| term.gradient(x), term.lipschitz(), dim, &sampler)?;
            if !report.passed {
                return Err(Error::Precondition(format!(
                    "gradient of `{name}` is not {}-Lipschitz (excess {:.3e})",
                    term.lipschitz(),
                    report.max_violation
                )));
            }
        }
        Ok(SaddleSpec {
            f,
            g,
            h,
            ell_star,
            l,
        })
    }

    pub fn primal_dim(&self) -> usize {
        self.l.cols()
    }

    pub fn dual_dim(&self) -> usize {
        self.l.rows()
    }

    pub fn mu(&self) -> f64 {
        self.h.lipschitz()
    }

    pub fn nu(&self) -> f64 {
        self.ell_star.lipschitz()
    }

    /// `β = max{μ, ν} + ‖L‖`.
    pub fn beta(&self) -> f64 {
        self.mu().max(self.nu()) + self.l.norm()
    }
}

/// Serialized form of [`SaddleSpec`]; missing smooth terms are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaddleProblemSpec {
    pub f: ProxSpec,
    pub g: ProxSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<SmoothSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell_star: Option<SmoothSpec>,
    pub l: Vec<Vec<f64>>,
}

impl SaddleProblemSpec {
    pub fn build(&self) -> Result<SaddleSpec> {
        let l = LinOp::from_rows(&self.l)?;
        let smooth = |s: &Option<SmoothSpec>, dim: usize| match s {
            Some(s) => s.build(),
            None => Ok(SmoothTerm::zero(Some(dim))),
        };
        SaddleSpec::new(
            self.f.build()?,
            self.g.build()?,
            smooth(&self.h, l.cols())?,
            smooth(&self.ell_star, l.rows())?,
            l,
        )
    }
}

/// The splitting `𝐀 = 𝐌 + 𝐁` on `ℋ ⊕ 𝒢` (points stacked as `(x, v)`).
#[derive(Debug, Clone)]
pub struct PdOperators {
    /// `(x, v) ↦ ∂f(x) × ∂g*(v)`
    pub m: MonotoneOp,
    /// `(x, v) ↦ (∇h(x) + L*v, ∇ℓ*(v) − Lx)`
    pub b: MonotoneOp,
    pub beta: f64,
}

pub(crate) fn split(z: &Vector, n: usize) -> (Vector, Vector) {
    (z.rows(0, n).into_owned(), z.rows(n, z.len() - n).into_owned())
}

pub(crate) fn stack(parts: &[&Vector]) -> Vector {
    let len = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(len);
    let mut at = 0;
    for p in parts {
        out.rows_mut(at, p.len()).copy_from(p);
        at += p.len();
    }
    out
}

pub fn make_pd_operator(s: &SaddleSpec) -> Result<PdOperators> {
    let (n, k) = (s.primal_dim(), s.dual_dim());
    let f = s.f.clone();
    let g_star = moreau_complement(&s.g);
    let m = MonotoneOp::from_resolvent("pd_m", Some(n + k), move |gamma, z| {
        let (x, v) = split(z, n);
        Ok(stack(&[&f.prox(gamma, &x)?, &g_star.prox(gamma, &v)?]))
    });
    let (h, ls, l) = (s.h.clone(), s.ell_star.clone(), s.l.clone());
    let beta = s.beta();
    let b = MonotoneOp::forward_only("pd_b", Some(n + k), beta, move |z| {
        check_dim(n + k, z.len())?;
        let (x, v) = split(z, n);
        let top = h.gradient(&x)? + l.adjoint(&v)?;
        let bottom = ls.gradient(&v)? - l.forward(&x)?;
        Ok(stack(&[&top, &bottom]))
    })?;
    Ok(PdOperators { m, b, beta })
}

/// `𝐌 + 𝐒` on `ℋ ⊕ 𝒢 ⊕ 𝒢` (points stacked as `(x, y, v)`).
#[derive(Debug, Clone)]
pub struct LagrangianOperators {
    /// `(x, y, v) ↦ ∂f(x) × ∂g(y) × {0}`
    pub m: MonotoneOp,
    /// `(x, y, v) ↦ (L*v, −v, −Lx + y)`, skew with norm `√(1 + ‖L‖²)`
    pub s: MonotoneOp,
}

pub fn make_lagrangian_operator(f: &ProxFn, g: &ProxFn, l: &LinOp) -> Result<LagrangianOperators> {
    let (n, k) = (l.cols(), l.rows());
    check_opt_dim(n, f.dim())?;
    check_opt_dim(k, g.dim())?;
    let (f2, g2) = (f.clone(), g.clone());
    let m = MonotoneOp::from_resolvent("lagrangian_m", Some(n + 2 * k), move |gamma, z| {
        check_dim(n + 2 * k, z.len())?;
        let x = z.rows(0, n).into_owned();
        let y = z.rows(n, k).into_owned();
        let v = z.rows(n + k, k).into_owned();
        Ok(stack(&[&f2.prox(gamma, &x)?, &g2.prox(gamma, &y)?, &v]))
    });
    let s = match l.as_dense() {
        Some(ld) => {
            let d = n + 2 * k;
            let mut sm = Matrix::zeros(d, d);
            sm.view_mut((0, n + k), (n, k)).copy_from(&ld.transpose());
            sm.view_mut((n, n + k), (k, k)).copy_from(&(-Matrix::identity(k, k)));
            sm.view_mut((n + k, 0), (k, n)).copy_from(&(-ld));
            sm.view_mut((n + k, n), (k, k)).copy_from(&Matrix::identity(k, k));
            MonotoneOp::from_linear(sm)?
        }
        None => {
            let l2 = l.clone();
            let norm = l.norm();
            MonotoneOp::forward_only("lagrangian_s", Some(n + 2 * k), (1.0 + norm * norm).sqrt(), move |z| {
                check_dim(n + 2 * k, z.len())?;
                let x = z.rows(0, n).into_owned();
                let y = z.rows(n, k).into_owned();
                let v = z.rows(n + k, k).into_owned();
                Ok(stack(&[&l2.adjoint(&v)?, &(-&v), &(y - l2.forward(&x)?)]))
            })?
        }
    };
    Ok(LagrangianOperators {
        m,
        s: s.with_label("lagrangian_s"),
    })
}

/// `𝓛(x₁, x₂) = ½⟨Px₁, x₁⟩ + ⟨x₁, Cx₂⟩ − ½⟨Rx₂, x₂⟩ + ⟨a, x₁⟩ − ⟨b, x₂⟩`,
/// convex in `x₁` and concave in `x₂` when `P` and `R` are positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticLagrangian {
    pub p: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

fn symmetric_psd(name: &'static str, m: &Matrix) -> Result<()> {
    if !m.is_square() || (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::param(name, "must be symmetric"));
    }
    if !is_psd(m) {
        return Err(Error::Precondition(format!(
            "`{name}` is not positive semidefinite, so the Lagrangian is not convex-concave"
        )));
    }
    Ok(())
}

/// `(x₁, x₂) ↦ (∇₁𝓛, −∇₂𝓛) = (Px₁ + Cx₂ + a, −C*x₁ + Rx₂ + b)`.
pub fn saddle_operator_linear(lag: &QuadraticLagrangian) -> Result<MonotoneOp> {
    let p = matrix_from_rows(&lag.p)?;
    let c = matrix_from_rows(&lag.c)?;
    let r = matrix_from_rows(&lag.r)?;
    symmetric_psd("p", &p)?;
    symmetric_psd("r", &r)?;
    let (n1, n2) = (p.nrows(), r.nrows());
    if c.shape() != (n1, n2) {
        return Err(Error::param(
            "c",
            format!("expected a {n1}×{n2} matrix, got {}×{}", c.nrows(), c.ncols()),
        ));
    }
    let a = lag.a.as_ref().map_or(Vector::zeros(n1), |a| Vector::from_column_slice(a));
    let b = lag.b.as_ref().map_or(Vector::zeros(n2), |b| Vector::from_column_slice(b));
    check_dim(n1, a.len())?;
    check_dim(n2, b.len())?;
    let mut m = Matrix::zeros(n1 + n2, n1 + n2);
    m.view_mut((0, 0), (n1, n1)).copy_from(&p);
    m.view_mut((0, n1), (n1, n2)).copy_from(&c);
    m.view_mut((n1, 0), (n2, n1)).copy_from(&(-c.transpose()));
    m.view_mut((n1, n1), (n2, n2)).copy_from(&r);
    let shift = stack(&[&a, &b]);
    Ok(MonotoneOp::from_affine(m, shift)?.with_label("saddle_linear"))
}
