//! Nonempty closed convex sets with projections, support functions and
//! membership tests.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Vector};

/// Relative slack used by membership tests, so that points produced by a
/// projection (and therefore subject to rounding) still count as inside.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

/// Declarative description of a closed convex set, as it appears in
/// problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{x : ⟨normal, x⟩ ≤ offset}`
    Halfspace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// `{x : ⟨normal, x⟩ = offset}`
    Hyperplane {
        normal: Vec<f64>,
        offset: f64,
    },
    /// Linear span of `basis`. `dim` is only needed for the zero subspace.
    Subspace {
        basis: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    ConeNonneg {
        dim: usize,
    },
    /// Second-order cone `{(z, t) : ‖z‖ ≤ t}` with `t` the last coordinate.
    Soc {
        dim: usize,
    },
    PolarOf {
        of: Box<SetSpec>,
    },
    Singleton {
        point: Vec<f64>,
    },
}

impl SetSpec {
    pub fn build(&self) -> Result<ConvexSet> {
        ConvexSet::from_spec(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    Halfspace { normal: Vector, offset: f64 },
    Hyperplane { normal: Vector, offset: f64 },
    /// Columns form an orthonormal basis.
    Subspace { basis: Matrix },
    ConeNonneg,
    Soc,
    Polar(Box<ConvexSet>),
    Singleton(Vector),
}

/// A validated nonempty closed convex subset of `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSet {
    dim: usize,
    kind: Kind,
}

fn finite_vec(name: &'static str, v: &[f64]) -> Result<Vector> {
    if v.is_empty() {
        return Err(Error::param(name, "must not be empty"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(name));
    }
    Ok(Vector::from_column_slice(v))
}

fn nonzero_normal(v: &[f64]) -> Result<Vector> {
    let n = finite_vec("normal", v)?;
    if n.norm() == 0.0 {
        return Err(Error::param("normal", "must be nonzero"));
    }
    Ok(n)
}

/// Modified Gram-Schmidt; fails when the vectors are linearly dependent.
fn orthonormalize(dim: usize, vectors: &[Vector]) -> Result<Matrix> {
    let mut cols: Vec<Vector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        check_dim(dim, v.len())?;
        let scale = v.norm();
        let mut w = v.clone();
        for q in &cols {
            let c = q.dot(&w);
            w -= q * c;
        }
        let n = w.norm();
        if scale == 0.0 || n <= 1e-10 * scale {
            return Err(Error::param("basis", "vectors must be linearly independent"));
        }
        cols.push(w / n);
    }
    if cols.is_empty() {
        Ok(Matrix::zeros(dim, 0))
    } else {
        Ok(Matrix::from_columns(&cols))
    }
}

impl ConvexSet {
    pub fn from_spec(spec: &SetSpec) -> Result<Self> {
        let (dim, kind) = match spec {
            SetSpec::Box { lower, upper } => {
                let lower = finite_vec("lower", lower)?;
                let upper = finite_vec("upper", upper)?;
                check_dim(lower.len(), upper.len())?;
                if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
                    return Err(Error::param("box", "lower must not exceed upper"));
                }
                (lower.len(), Kind::Box { lower, upper })
            }
            SetSpec::Ball { center, radius } => {
                let center = finite_vec("center", center)?;
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::param("radius", format!("must be >= 0, got {radius}")));
                }
                (
                    center.len(),
                    Kind::Ball {
                        center,
                        radius: *radius,
                    },
                )
            }
            SetSpec::Halfspace { normal, offset } | SetSpec::Hyperplane { normal, offset } => {
                let normal = nonzero_normal(normal)?;
                if !offset.is_finite() {
                    return Err(Error::NonFinite("offset"));
                }
                let dim = normal.len();
                let kind = if matches!(spec, SetSpec::Halfspace { .. }) {
                    Kind::Halfspace {
                        normal,
                        offset: *offset,
                    }
                } else {
                    Kind::Hyperplane {
                        normal,
                        offset: *offset,
                    }
                };
                (dim, kind)
            }
            SetSpec::Subspace { basis, dim } => {
                let ambient = match (basis.first(), dim) {
                    (Some(b), Some(d)) => {
                        check_dim(*d, b.len())?;
                        *d
                    }
                    (Some(b), None) => b.len(),
                    (None, Some(d)) => *d,
                    (None, None) => {
                        return Err(Error::param("subspace", "an empty basis needs `dim`"))
                    }
                };
                if ambient == 0 {
                    return Err(Error::param("dim", "must be at least 1"));
                }
                let vecs = basis
                    .iter()
                    .map(|b| finite_vec("basis", b))
                    .collect::<Result<Vec<_>>>()?;
                if vecs.len() > ambient {
                    return Err(Error::param("basis", "more vectors than the ambient dimension"));
                }
                (
                    ambient,
                    Kind::Subspace {
                        basis: orthonormalize(ambient, &vecs)?,
                    },
                )
            }
            SetSpec::ConeNonneg { dim } => {
                if *dim == 0 {
                    return Err(Error::param("dim", "must be at least 1"));
                }
                (*dim, Kind::ConeNonneg)
            }
            SetSpec::Soc { dim } => {
                if *dim < 2 {
                    return Err(Error::param("dim", "second-order cone needs dim >= 2"));
                }
                (*dim, Kind::Soc)
            }
            SetSpec::PolarOf { of } => {
                let inner = ConvexSet::from_spec(of)?;
                return inner.polar();
            }
            SetSpec::Singleton { point } => {
                let p = finite_vec("point", point)?;
                (p.len(), Kind::Singleton(p))
            }
        };
        Ok(ConvexSet { dim, kind })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The subspace spanned by `basis` (which need not be orthonormal).
    pub fn subspace(dim: usize, basis: &[Vector]) -> Result<Self> {
        Ok(ConvexSet {
            dim,
            kind: Kind::Subspace {
                basis: orthonormalize(dim, basis)?,
            },
        })
    }

    pub fn nonneg_orthant(dim: usize) -> Self {
        ConvexSet {
            dim,
            kind: Kind::ConeNonneg,
        }
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        Self::from_spec(&SetSpec::Ball {
            center: center.as_slice().to_vec(),
            radius,
        })
    }

    pub fn singleton(point: Vector) -> Self {
        ConvexSet {
            dim: point.len(),
            kind: Kind::Singleton(point),
        }
    }

    pub fn is_cone(&self) -> bool {
        match &self.kind {
            Kind::ConeNonneg | Kind::Soc | Kind::Subspace { .. } | Kind::Polar(_) => true,
            Kind::Halfspace { offset, .. } | Kind::Hyperplane { offset, .. } => *offset == 0.0,
            Kind::Singleton(p) => p.iter().all(|v| *v == 0.0),
            Kind::Ball { center, radius } => *radius == 0.0 && center.iter().all(|v| *v == 0.0),
            Kind::Box { lower, upper } => lower.iter().chain(upper.iter()).all(|v| *v == 0.0),
        }
    }

    pub fn is_subspace(&self) -> bool {
        match &self.kind {
            Kind::Subspace { .. } => true,
            Kind::Polar(inner) => inner.is_subspace(),
            _ => false,
        }
    }

    /// Polar cone `{u : ⟨u, x⟩ ≤ 0 ∀x ∈ K}`; only defined for cones here.
    pub fn polar(&self) -> Result<Self> {
        if !self.is_cone() {
            return Err(Error::Precondition(
                "polar_of is only supported for closed convex cones".into(),
            ));
        }
        if let Kind::Polar(inner) = &self.kind {
            return Ok((**inner).clone());
        }
        Ok(ConvexSet {
            dim: self.dim,
            kind: Kind::Polar(Box::new(self.clone())),
        })
    }

    /// Orthogonal projector matrix, for subspaces only.
    pub fn projector_matrix(&self) -> Result<Matrix> {
        match &self.kind {
            Kind::Subspace { basis } => Ok(basis * basis.transpose()),
            Kind::Polar(inner) if inner.is_subspace() => {
                Ok(Matrix::identity(self.dim, self.dim) - inner.projector_matrix()?)
            }
            _ => Err(Error::Precondition("set is not a linear subspace".into())),
        }
    }

    /// Orthonormal basis (as columns), for subspaces given by a basis.
    pub fn orthonormal_basis(&self) -> Option<&Matrix> {
        match &self.kind {
            Kind::Subspace { basis } => Some(basis),
            _ => None,
        }
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(self.project_unchecked(x))
    }

    fn project_unchecked(&self, x: &Vector) -> Vector {
        match &self.kind {
            Kind::Box { lower, upper } => {
                Vector::from_fn(self.dim, |i, _| x[i].clamp(lower[i], upper[i]))
            }
            Kind::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center + d * (*radius / n)
                }
            }
            Kind::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x - normal * (excess / normal.norm_squared())
                }
            }
            Kind::Hyperplane { normal, offset } => {
                let excess = normal.dot(x) - offset;
                x - normal * (excess / normal.norm_squared())
            }
            Kind::Subspace { basis } => basis * basis.tr_mul(x),
            Kind::ConeNonneg => x.map(|v| v.max(0.0)),
            Kind::Soc => {
                let n = self.dim - 1;
                let t = x[n];
                let z = x.rows(0, n);
                let zn = z.norm();
                if zn <= t {
                    x.clone()
                } else if zn <= -t {
                    Vector::zeros(self.dim)
                } else {
                    let a = 0.5 * (zn + t);
                    let mut out = Vector::zeros(self.dim);
                    out.rows_mut(0, n).copy_from(&(z * (a / zn)));
                    out[n] = a;
                    out
                }
            }
            Kind::Polar(inner) => x - inner.project_unchecked(x),
            Kind::Singleton(p) => p.clone(),
        }
    }

    pub fn distance(&self, x: &Vector) -> Result<f64> {
        Ok((x - self.project(x)?).norm())
    }

    pub fn contains(&self, x: &Vector) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        let tol = MEMBERSHIP_TOLERANCE * (1.0 + x.norm());
        Ok((x - self.project_unchecked(x)).norm() <= tol)
    }

    /// `ι_C(x)`: zero inside (up to [`MEMBERSHIP_TOLERANCE`]), `+∞` outside.
    pub fn indicator(&self, x: &Vector) -> Result<f64> {
        Ok(if self.contains(x)? { 0.0 } else { f64::INFINITY })
    }

    /// Support function `σ_C(u) = sup_{x∈C} ⟨x, u⟩`, possibly `+∞`.
    pub fn support(&self, u: &Vector) -> Result<f64> {
        check_dim(self.dim, u.len())?;
        let tol = MEMBERSHIP_TOLERANCE * (1.0 + u.norm());
        let value = match &self.kind {
            Kind::Box { lower, upper } => (0..self.dim)
                .map(|i| (u[i] * lower[i]).max(u[i] * upper[i]))
                .sum(),
            Kind::Ball { center, radius } => center.dot(u) + radius * u.norm(),
            Kind::Halfspace { normal, offset } | Kind::Hyperplane { normal, offset } => {
                let t = normal.dot(u) / normal.norm_squared();
                let parallel = (u - normal * t).norm() <= tol;
                let signed_ok =
                    matches!(self.kind, Kind::Hyperplane { .. }) || t >= -tol / normal.norm();
                if parallel && signed_ok {
                    t * offset
                } else {
                    f64::INFINITY
                }
            }
            // σ of a cone is the indicator of its polar.
            Kind::Subspace { .. } | Kind::ConeNonneg | Kind::Soc | Kind::Polar(_) => {
                return self.polar()?.indicator(u);
            }
            Kind::Singleton(p) => p.dot(u),
        };
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn projections_of_basic_sets() {
        let b = SetSpec::Box {
            lower: vec![-1.0, 0.0],
            upper: vec![1.0, 2.0],
        }
        .build()
        .unwrap();
        assert_eq!(b.project(&v(&[3.0, -1.0])).unwrap(), v(&[1.0, 0.0]));

        let ball = ConvexSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(ball.project(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
        assert!((ball.project(&v(&[3.0, 4.0])).unwrap() - v(&[0.6, 0.8])).norm() < 1e-15);

        let h = SetSpec::Halfspace {
            normal: vec![1.0, 1.0],
            offset: 1.0,
        }
        .build()
        .unwrap();
        assert_eq!(h.project(&v(&[2.0, 1.0])).unwrap(), v(&[1.0, 0.0]));
        assert_eq!(h.project(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn second_order_cone_projection() {
        let k = SetSpec::Soc { dim: 3 }.build().unwrap();
        assert_eq!(k.project(&v(&[0.0, 0.0, -1.0])).unwrap(), v(&[0.0, 0.0, 0.0]));
        assert_eq!(k.project(&v(&[1.0, 0.0, 2.0])).unwrap(), v(&[1.0, 0.0, 2.0]));
        let p = k.project(&v(&[2.0, 0.0, 0.0])).unwrap();
        assert!((p - v(&[1.0, 0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn polar_of_orthant_is_nonpositive_orthant() {
        let k = ConvexSet::nonneg_orthant(2);
        let kp = k.polar().unwrap();
        assert_eq!(kp.project(&v(&[1.0, -2.0])).unwrap(), v(&[0.0, -2.0]));
        assert_eq!(kp.polar().unwrap(), k);
        let ball = ConvexSet::ball(v(&[1.0, 0.0]), 1.0).unwrap();
        assert!(ball.polar().is_err());
    }

    #[test]
    fn subspace_rejects_dependent_basis() {
        let spec = SetSpec::Subspace {
            basis: vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            dim: None,
        };
        assert!(spec.build().is_err());
        let zero = SetSpec::Subspace {
            basis: vec![],
            dim: Some(3),
        }
        .build()
        .unwrap();
        assert_eq!(zero.project(&v(&[1.0, 2.0, 3.0])).unwrap(), Vector::zeros(3));
    }

    #[test]
    fn subspace_projector_and_complement() {
        let d = ConvexSet::subspace(2, &[v(&[1.0, 1.0])]).unwrap();
        let p = d.projector_matrix().unwrap();
        assert!((p - Matrix::from_element(2, 2, 0.5)).amax() < 1e-15);
        let perp = d.polar().unwrap();
        let x = perp.project(&v(&[2.0, 0.0])).unwrap();
        assert!((x - v(&[1.0, -1.0])).norm() < 1e-15);
    }

    #[test]
    fn support_functions() {
        let b = SetSpec::Box {
            lower: vec![-1.0, -1.0],
            upper: vec![1.0, 1.0],
        }
        .build()
        .unwrap();
        assert_eq!(b.support(&v(&[2.0, -3.0])).unwrap(), 5.0);
        let h = SetSpec::Halfspace {
            normal: vec![0.0, 2.0],
            offset: 4.0,
        }
        .build()
        .unwrap();
        assert_eq!(h.support(&v(&[0.0, 1.0])).unwrap(), 2.0);
        assert_eq!(h.support(&v(&[0.0, -1.0])).unwrap(), f64::INFINITY);
        assert_eq!(h.support(&v(&[1.0, 1.0])).unwrap(), f64::INFINITY);
        let k = ConvexSet::nonneg_orthant(2);
        assert_eq!(k.support(&v(&[-1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(k.support(&v(&[1.0, 0.0])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = SetSpec::PolarOf {
            of: Box::new(SetSpec::Soc { dim: 3 }),
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<SetSpec>(&s).unwrap(), spec);
        let bad = r#"{"kind":"ball","center":[0],"radius":1,"extra":2}"#;
        assert!(serde_json::from_str::<SetSpec>(bad).is_err());
    }
}
