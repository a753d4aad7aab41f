//! Dense small-scale linear algebra for the SQP step decomposition.
//!
//! Every iteration of the constrained steppers needs two things from the
//! constraint Jacobian `J` (m × n, m < n, full row rank): the normal step
//! `v = −ρ Jᵀ(JJᵀ)⁻¹c` and projections `Pq = q − Jᵀ(JJᵀ)⁻¹Jq` onto `null(J)`.
//! Both reduce to solves with the m × m Gram matrix `JJᵀ`, which
//! [`NullSpace`] factors once per iterate. [`kkt_solve_direct`] solves the
//! unreduced saddle-point system and is kept as an independent reference.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`.

mod cholesky;
mod eigen;
mod kkt;
mod matrix;
mod projection;

pub use cholesky::{cholesky_solve, CholeskyFactor, SYMMETRY_TOL};
pub use eigen::{smallest_singular_value, symmetric_eigenvalues};
pub use kkt::kkt_solve_direct;
pub use matrix::DenseMatrix;
pub use projection::{normal_step, project_null, NullSpace};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot}); the constraint Jacobian is rank deficient")]
    NotPositiveDefinite { pivot: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("{m} constraints need fewer than n = {n} variables")]
    TooManyConstraints { m: usize, n: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("empty matrix")]
    Empty,
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a x`.
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}
