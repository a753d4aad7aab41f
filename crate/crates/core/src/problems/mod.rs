//! Equality-constrained test problems.
//!
//! A [`Problem`] exposes a (possibly mini-batch) objective estimate with its
//! gradient and the exact constraint values with their Jacobian. The library
//! holds two analytic fixtures with known solutions and the damped-spring
//! network problem with hard ODE-residual constraints.

mod analytic;
mod batch;
mod spring;

pub use analytic::{CircleProblem, LinearProblem};
pub use batch::{Batch, BatchSampler};
pub use spring::{spring_exact, spring_exact_jet, SpringConfig, SpringProblem};

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::linalg::{DenseMatrix, LinalgError};
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("spring is not under-damped: w0² = {w0_sq} <= δ² = {delta_sq}")]
    Overdamped { w0_sq: f64, delta_sq: f64 },
    #[error("point has dimension {found}, problem has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One evaluation at an iterate: objective estimate, stochastic gradient,
/// constraint values and Jacobian (`m × n`).
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemEval {
    pub f_est: f64,
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    pub jac: DenseMatrix,
}

pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    /// Number of variables `n`.
    fn dim(&self) -> usize;

    /// Number of equality constraints `m`.
    fn num_constraints(&self) -> usize;

    /// Number of terms the objective averages over; mini-batches sample from
    /// these.
    fn num_samples(&self) -> usize {
        1
    }

    fn initial_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;

    /// Objective estimate and its gradient over `batch`. With
    /// [`Batch::Full`] this is the exact objective.
    fn objective(&self, x: &[f64], batch: &Batch) -> Result<(f64, Vec<f64>), ProblemError>;

    /// Exact objective value without a gradient.
    fn objective_value(&self, x: &[f64]) -> Result<f64, ProblemError> {
        Ok(self.objective(x, &Batch::Full)?.0)
    }

    fn constraints(&self, x: &[f64]) -> Result<(Vec<f64>, DenseMatrix), ProblemError>;

    fn constraint_values(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        Ok(self.constraints(x)?.0)
    }

    /// Standard deviation of isotropic Gaussian noise added to gradients.
    fn gradient_noise(&self) -> f64 {
        0.0
    }

    /// Stochastic gradient: batch estimate plus optional additive noise.
    fn stochastic_objective(
        &self,
        x: &[f64],
        batch: &Batch,
        noise: &mut ChaCha8Rng,
    ) -> Result<(f64, Vec<f64>), ProblemError> {
        let (f, mut g) = self.objective(x, batch)?;
        let sigma = self.gradient_noise();
        if sigma > 0.0 {
            for gi in &mut g {
                let z: f64 = StandardNormal.sample(noise);
                *gi += sigma * z;
            }
        }
        Ok((f, g))
    }

    fn evaluate(
        &self,
        x: &[f64],
        batch: &Batch,
        noise: &mut ChaCha8Rng,
    ) -> Result<ProblemEval, ProblemError> {
        let (f_est, g) = self.stochastic_objective(x, batch, noise)?;
        let (c, jac) = self.constraints(x)?;
        Ok(ProblemEval { f_est, g, c, jac })
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<(), ProblemError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(ProblemError::DimensionMismatch {
            expected,
            found: x.len(),
        })
    }
}
