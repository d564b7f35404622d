//! Proximity operators, monotone operators and the splitting algorithms
//! built from their resolvents.

pub mod error;
pub mod linalg;
pub mod monotone;
pub mod oracle;
pub mod prox;
pub mod resolvent;
pub mod sets;
pub mod smooth;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{LinOp, Matrix, Vector};
pub use prox::{ProxFn, ProxSpec};
pub use monotone::{MonotoneOp, MonotoneSpec, SaddleSpec};
pub use oracle::{Report, Sampler};
pub use sets::{ConvexSet, SetSpec};
pub use smooth::{SmoothSpec, SmoothTerm};
pub use solvers::{SolverConfig, SolverTrace, Status, StepPolicy};
