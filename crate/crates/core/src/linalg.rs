//! Vectors, bounded linear operators with adjoints, operator-norm estimation,
//! and certificates for linear maps (monotonicity, membership in the class of
//! proximity operators).

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};

/// A point of the ambient finite-dimensional Euclidean space.
pub type Vector = DVector<f64>;

/// Dense real matrix.
pub type Matrix = DMatrix<f64>;

/// Absolute eigenvalue threshold below which a symmetric matrix is not
/// considered positive semidefinite.
pub const PSD_TOLERANCE: f64 = 1e-10;

const POWER_ITERATION_SEED: u64 = 0x0005_eed0_fa11;

/// Build a vector from a slice, rejecting NaN and infinite entries.
pub fn vector(entries: &[f64]) -> Result<Vector> {
    if entries.is_empty() {
        return Err(Error::param("vector", "dimension must be at least 1"));
    }
    if entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("vector entries"));
    }
    Ok(Vector::from_column_slice(entries))
}

/// Build a dense matrix from row-major rows.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::param("matrix", "must have at least one row"));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::param("matrix", "must have at least one column"));
    }
    for row in rows {
        check_dim(ncols, row.len())?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Row-major representation, the layout used in problem files.
pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Solve `a p = b` by LU with partial pivoting.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    check_dim(a.nrows(), b.len())?;
    a.clone().lu().solve(b).ok_or(Error::Singular)
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_sym_eigenvalue(a: &Matrix) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_psd(a: &Matrix) -> bool {
    a.is_square() && min_sym_eigenvalue(a) >= -PSD_TOLERANCE
}

/// Direction in which a [`LinOp`] is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Forward,
    Adjoint,
}

type LinearMap = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Dense(Arc<Matrix>),
    Map { forward: LinearMap, adjoint: LinearMap },
}

/// A bounded linear operator `L: R^cols -> R^rows` together with its adjoint.
///
/// Dense matrices are the canonical representation. Operator-form instances
/// must supply both directions; their consistency can be audited with
/// [`LinOp::adjoint_mismatch`].
#[derive(Clone)]
pub struct LinOp {
    rows: usize,
    cols: usize,
    repr: Repr,
    norm_bound: Option<f64>,
    norm_cache: Arc<OnceLock<f64>>,
}

impl fmt::Debug for LinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.repr {
            Repr::Dense(_) => "dense",
            Repr::Map { .. } => "map",
        };
        f.debug_struct("LinOp")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("kind", &kind)
            .field("norm_bound", &self.norm_bound)
            .finish()
    }
}

/// Outcome of [`LinOp::estimate_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl LinOp {
    pub fn dense(m: Matrix) -> Self {
        LinOp {
            rows: m.nrows(),
            cols: m.ncols(),
            repr: Repr::Dense(Arc::new(m)),
            norm_bound: None,
            norm_cache: Arc::new(OnceLock::new()),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        matrix_from_rows(rows).map(Self::dense)
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let op = Self::dense(Matrix::identity(n, n) * scale);
        let _ = op.norm_cache.set(scale.abs());
        op
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        let op = Self::dense(Matrix::zeros(rows, cols));
        let _ = op.norm_cache.set(0.0);
        op
    }

    /// Operator given by a pair of closures. Both must be linear and adjoint
    /// to each other; nothing here can enforce that beyond sampling.
    pub fn from_maps<F, G>(rows: usize, cols: usize, forward: F, adjoint: G) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        LinOp {
            rows,
            cols,
            repr: Repr::Map {
                forward: Arc::new(forward),
                adjoint: Arc::new(adjoint),
            },
            norm_bound: None,
            norm_cache: Arc::new(OnceLock::new()),
        }
    }

    /// Attach a known bound `‖Lx‖ ≤ bound·‖x‖`.
    pub fn with_norm_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::param("norm_bound", format!("must be finite and >= 0, got {bound}")));
        }
        self.norm_bound = Some(bound);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn norm_bound(&self) -> Option<f64> {
        self.norm_bound.or_else(|| self.norm_cache.get().copied())
    }

    pub fn as_dense(&self) -> Option<&Matrix> {
        match &self.repr {
            Repr::Dense(m) => Some(m),
            Repr::Map { .. } => None,
        }
    }

    /// Materialize the matrix by applying the operator to the canonical basis.
    pub fn to_dense(&self) -> Matrix {
        match &self.repr {
            Repr::Dense(m) => (**m).clone(),
            Repr::Map { forward, .. } => {
                let mut out = Matrix::zeros(self.rows, self.cols);
                for j in 0..self.cols {
                    let mut e = Vector::zeros(self.cols);
                    e[j] = 1.0;
                    out.set_column(j, &forward(&e));
                }
                out
            }
        }
    }

    pub fn apply(&self, x: &Vector, mode: Mode) -> Result<Vector> {
        let (input, output) = match mode {
            Mode::Forward => (self.cols, self.rows),
            Mode::Adjoint => (self.rows, self.cols),
        };
        check_dim(input, x.len())?;
        let y = match (&self.repr, mode) {
            (Repr::Dense(m), Mode::Forward) => &**m * x,
            (Repr::Dense(m), Mode::Adjoint) => m.tr_mul(x),
            (Repr::Map { forward, .. }, Mode::Forward) => forward(x),
            (Repr::Map { adjoint, .. }, Mode::Adjoint) => adjoint(x),
        };
        check_dim(output, y.len())?;
        Ok(y)
    }

    pub fn forward(&self, x: &Vector) -> Result<Vector> {
        self.apply(x, Mode::Forward)
    }

    pub fn adjoint(&self, x: &Vector) -> Result<Vector> {
        self.apply(x, Mode::Adjoint)
    }

    /// The adjoint as an operator in its own right.
    pub fn transpose(&self) -> LinOp {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(Arc::new(m.transpose())),
            Repr::Map { forward, adjoint } => Repr::Map {
                forward: adjoint.clone(),
                adjoint: forward.clone(),
            },
        };
        LinOp {
            rows: self.cols,
            cols: self.rows,
            repr,
            norm_bound: self.norm_bound,
            norm_cache: self.norm_cache.clone(),
        }
    }

    /// `|⟨Lx,u⟩ − ⟨x,L*u⟩| / (1 + ‖x‖‖u‖)` for one pair.
    pub fn adjoint_mismatch(&self, x: &Vector, u: &Vector) -> Result<f64> {
        let lhs = self.forward(x)?.dot(u);
        let rhs = x.dot(&self.adjoint(u)?);
        Ok((lhs - rhs).abs() / (1.0 + x.norm() * u.norm()))
    }

    /// Power iteration on `L*L` from a fixed seeded start.
    ///
    /// Stops when the relative change of the estimate drops below `tol`. A
    /// converged estimate is cached and later returned by [`LinOp::norm`].
    pub fn estimate_norm(&self, tol: f64, max_iter: usize) -> Result<NormEstimate> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::param("tol", format!("must be positive, got {tol}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
        let mut v = Vector::from_fn(self.cols, |_, _| StandardNormal.sample(&mut rng));
        v /= v.norm();

        let mut sigma = self.forward(&v)?.norm();
        if sigma == 0.0 {
            let _ = self.norm_cache.set(0.0);
            return Ok(NormEstimate {
                value: 0.0,
                converged: true,
                iterations: 0,
            });
        }
        for k in 1..=max_iter {
            let w = self.adjoint(&self.forward(&v)?)?;
            let wn = w.norm();
            if wn == 0.0 {
                // v fell into the kernel; the previous estimate is the best we have.
                break;
            }
            v = w / wn;
            let next = self.forward(&v)?.norm();
            let change = (next - sigma).abs();
            sigma = next;
            if change <= tol * sigma {
                let _ = self.norm_cache.set(sigma);
                return Ok(NormEstimate {
                    value: sigma,
                    converged: true,
                    iterations: k,
                });
            }
        }
        Ok(NormEstimate {
            value: sigma,
            converged: false,
            iterations: max_iter,
        })
    }

    /// Operator norm: the cached estimate, or a fresh tight one.
    pub fn norm(&self) -> f64 {
        if let Some(v) = self.norm_cache.get() {
            return *v;
        }
        match self.estimate_norm(1e-13, 100_000) {
            Ok(est) => est.value,
            Err(_) => f64::NAN,
        }
    }
}

/// Result of splitting a square matrix into symmetric and skew parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSkewSplit {
    pub sym: Matrix,
    pub skew: Matrix,
    /// The symmetric part is positive semidefinite.
    pub monotone: bool,
    /// The matrix is symmetric, positive semidefinite and has spectral norm
    /// at most one, i.e. it is the proximity operator of some convex function.
    pub prox_class: bool,
}

pub fn sym_skew_split(a: &Matrix) -> Result<SymSkewSplit> {
    if !a.is_square() {
        return Err(Error::param(
            "matrix",
            format!("must be square, got {}x{}", a.nrows(), a.ncols()),
        ));
    }
    let at = a.transpose();
    let sym = (a + &at) * 0.5;
    let skew = (a - &at) * 0.5;

    let eig = SymmetricEigen::new(sym.clone()).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let monotone = lo >= -PSD_TOLERANCE;

    let scale = 1.0 + a.amax();
    let symmetric = skew.amax() <= 1e-12 * scale;
    let prox_class = symmetric && monotone && hi <= 1.0 + PSD_TOLERANCE;

    Ok(SymSkewSplit {
        sym,
        skew,
        monotone,
        prox_class,
    })
}
