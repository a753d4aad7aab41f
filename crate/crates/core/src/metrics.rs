//! Stationarity and merit quantities.
//!
//! `‖P∇f‖₂²` and `‖c‖₁` are always computed from the exact (full-batch,
//! noise-free) gradient. The merit `φ(x, τ) = τ f(x) + ‖c(x)‖₁` uses a
//! `τ` derived from [`TauConstants`]; the optimizers never read it.

use thiserror::Error;

use crate::linalg::{norm1, norm2, smallest_singular_value, LinalgError, NullSpace};
use crate::optimizers::Schedule;
use crate::problems::{Batch, Problem, ProblemError, ProblemEval};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot estimate constants from an empty trajectory")]
    EmptyTrajectory,
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `φ(x, τ) = τ f + ‖c‖₁`.
pub fn merit(f: f64, c: &[f64], tau: f64) -> f64 {
    tau * f + norm1(c)
}

/// Constants entering the merit parameter bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauConstants {
    /// Lower bound on the smallest singular value of `J`. Infinite when
    /// there are no constraints.
    pub sigma_min: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Upper bound on `‖∇f‖₂`; zero only if every observed gradient was.
    pub kappa_grad: f64,
}

impl TauConstants {
    pub fn new(
        sigma_min: f64,
        rho_min: f64,
        rho_max: f64,
        kappa_grad: f64,
    ) -> Result<Self, MetricsError> {
        let k = Self {
            sigma_min,
            rho_min,
            rho_max,
            kappa_grad,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |m: String| Err(MetricsError::InvalidConstants(m));
        if !(self.sigma_min > 0.0) {
            return bad(format!("sigma_min = {} must be positive", self.sigma_min));
        }
        if !(self.rho_min > 0.0 && self.rho_min <= self.rho_max && self.rho_max <= 1.0) {
            return bad(format!(
                "need 0 < rho_min <= rho_max <= 1, got {} and {}",
                self.rho_min, self.rho_max
            ));
        }
        if !(self.kappa_grad >= 0.0 && self.kappa_grad.is_finite()) {
            return bad(format!("kappa_grad = {} must be finite and >= 0", self.kappa_grad));
        }
        Ok(())
    }
}

/// `τ = σ_min ρ_min / (σ_min ρ_min + κ_∇f ρ_max)`.
pub fn tau_from_constants(k: &TauConstants) -> f64 {
    if k.sigma_min.is_infinite() {
        return 1.0;
    }
    let a = k.sigma_min * k.rho_min;
    a / (a + k.kappa_grad * k.rho_max)
}

/// Constants observed along a trajectory of exact evaluations: the smallest
/// singular value of `J` and the largest `‖∇f‖₂`, with the `ρ` bounds read
/// from the schedule. These are empirical proxies, not certified bounds.
pub fn estimate_constants(
    trajectory: &[ProblemEval],
    rho: &Schedule,
) -> Result<TauConstants, MetricsError> {
    if trajectory.is_empty() {
        return Err(MetricsError::EmptyTrajectory);
    }
    let mut sigma_min = f64::INFINITY;
    let mut kappa_grad: f64 = 0.0;
    for e in trajectory {
        if e.jac.rows() > 0 {
            sigma_min = sigma_min.min(smallest_singular_value(&e.jac)?);
        }
        kappa_grad = kappa_grad.max(norm2(&e.g));
    }
    TauConstants::new(sigma_min, rho.min(), rho.max(), kappa_grad)
}

/// Exact quantities at one iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct StationarityEntry {
    pub f: f64,
    pub proj_grad_sq: f64,
    pub cviol_l1: f64,
}

impl StationarityEntry {
    pub fn merit(&self, tau: f64) -> f64 {
        tau * self.f + self.cviol_l1
    }
}

/// Full-batch, noise-free evaluation at `x`.
pub fn exact_eval<P: Problem + ?Sized>(problem: &P, x: &[f64]) -> Result<ProblemEval, MetricsError> {
    let (f_est, g) = problem.objective(x, &Batch::Full)?;
    let (c, jac) = problem.constraints(x)?;
    Ok(ProblemEval { f_est, g, c, jac })
}

/// Stationarity quantities from an exact evaluation.
pub fn stationarity_of(eval: &ProblemEval, jitter: bool) -> Result<StationarityEntry, MetricsError> {
    let pg = NullSpace::build(&eval.jac, jitter)?.project(&eval.g)?;
    let n = norm2(&pg);
    Ok(StationarityEntry {
        f: eval.f_est,
        proj_grad_sq: n * n,
        cviol_l1: norm1(&eval.c),
    })
}

/// `‖P(x)∇f(x)‖₂²`, `‖c(x)‖₁` and `f(x)` with the exact gradient.
pub fn stationarity<P: Problem + ?Sized>(
    problem: &P,
    x: &[f64],
) -> Result<StationarityEntry, MetricsError> {
    stationarity_of(&exact_eval(problem, x)?, false)
}

/// One row of the running report.
#[derive(Clone, Debug, PartialEq)]
pub struct StationarityReport {
    pub proj_grad_sq: f64,
    pub cviol_l1: f64,
    pub merit: f64,
    /// Mean of `h_max⁻¹ ‖P∇f‖₂² + ρ_min ‖c‖₁` over the entries pushed so far.
    pub running_avg: f64,
}

/// Running mean of `h_max⁻¹ ‖P∇f‖₂² + ρ_min ‖c‖₁`, summed in push order.
#[derive(Clone, Debug)]
pub struct RunningAverage {
    inv_h_max: f64,
    rho_min: f64,
    sum: f64,
    count: u64,
}

impl RunningAverage {
    pub fn new(h_max: f64, rho_min: f64) -> Self {
        Self {
            inv_h_max: 1.0 / h_max,
            rho_min,
            sum: 0.0,
            count: 0,
        }
    }

    pub fn term(&self, proj_grad_sq: f64, cviol_l1: f64) -> f64 {
        self.inv_h_max * proj_grad_sq + self.rho_min * cviol_l1
    }

    pub fn push(&mut self, proj_grad_sq: f64, cviol_l1: f64) -> f64 {
        self.sum += self.term(proj_grad_sq, cviol_l1);
        self.count += 1;
        self.value()
    }

    pub fn value(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Adds an entry and returns the full report row.
    pub fn report(&mut self, entry: &StationarityEntry, tau: f64) -> StationarityReport {
        let running_avg = self.push(entry.proj_grad_sq, entry.cviol_l1);
        StationarityReport {
            proj_grad_sq: entry.proj_grad_sq,
            cviol_l1: entry.cviol_l1,
            merit: entry.merit(tau),
            running_avg,
        }
    }
}
