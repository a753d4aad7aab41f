//! Projected stochastic SQP methods with momentum for equality-constrained
//! learning problems.
//!
//! The steppers in [`optimizers`] take a [`ProblemEval`] (stochastic
//! gradient, constraint values and Jacobian) and return a search direction
//! whose normal component keeps the linearized constraints satisfied. The
//! [`harness`] module runs them on the problems in [`problems`] and logs
//! trajectories.

pub mod autodiff;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod series;

pub use harness::{Budget, ConfigError, ExperimentConfig, HarnessError, ProblemId, RunOutput};
pub use linalg::{DenseMatrix, LinalgError, NullSpace};
pub use metrics::{MetricsError, StationarityEntry, TauConstants};
pub use model::{MlpSpec, ModelError};
pub use optimizers::{CommonHyper, OptimError, Optimizer, OptimizerKind, Schedule, Step};
pub use problems::{Batch, CircleProblem, LinearProblem, Problem, ProblemError, ProblemEval, SpringProblem};
