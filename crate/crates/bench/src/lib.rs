//! Shared fixtures for the benchmarks. Data comes from the library's own
//! seeded sampler so every run sees the same problems.

use proxkit::linalg::{LinOp, Matrix, Vector};
use proxkit::monotone::MonotoneOp;
use proxkit::prox::{l1, Quadratic};
use proxkit::smooth::SmoothTerm;
use proxkit::{Sampler, SaddleSpec};

pub const SEED: u64 = 0x5eed;

pub fn point(dim: usize, salt: u64) -> Vector {
    Sampler::new(SEED ^ salt, 1, 10.0).points(dim).remove(0)
}

/// Gaussian-ish dense matrix built from sampled rows.
pub fn matrix(rows: usize, cols: usize, salt: u64) -> Matrix {
    let pts = Sampler::new(SEED ^ salt, rows, 1.0).points(cols);
    Matrix::from_fn(rows, cols, |i, j| pts[i][j])
}

/// `AᵀA + I`, comfortably positive definite.
pub fn spd(dim: usize, salt: u64) -> Matrix {
    let a = matrix(dim, dim, salt);
    a.transpose() * &a + Matrix::identity(dim, dim)
}

/// `min ½‖Ax − b‖² + w‖x‖₁` split as `∂(w‖·‖₁) + ∇(½‖A· − b‖²)`, with the
/// Lipschitz constant of the gradient.
pub fn lasso(rows: usize, cols: usize, w: f64) -> (MonotoneOp, MonotoneOp, f64) {
    let a = matrix(rows, cols, 1);
    let b = point(rows, 2);
    let q = Quadratic::new(a.transpose() * &a, Some(-(a.transpose() * b))).expect("psd by construction");
    let h = SmoothTerm::quadratic(&q, 0.0).expect("finite data");
    let beta = h.lipschitz();
    let grad = MonotoneOp::from_gradient(&h).expect("finite data");
    (MonotoneOp::from_prox(&l1(w).expect("positive weight")), grad, beta)
}

/// `min ½‖x − c‖² + ‖Lx‖₁`.
pub fn composite(rows: usize, cols: usize) -> SaddleSpec {
    let c = point(cols, 3);
    let q = Quadratic::new(Matrix::identity(cols, cols), Some(-c)).expect("identity is psd");
    SaddleSpec::new(
        q.prox_fn(),
        l1(1.0).expect("positive weight"),
        SmoothTerm::zero(Some(cols)),
        SmoothTerm::zero(Some(rows)),
        LinOp::dense(matrix(rows, cols, 4)),
    )
    .expect("consistent dimensions")
}
