use rand_chacha::ChaCha8Rng;

use super::{check_dim, Batch, Problem, ProblemError};
use crate::linalg::DenseMatrix;

/// `min (x₁−2)² + x₂²  s.t.  x₁² + x₂² = 1`.
///
/// Minimizer `(1, 0)` with multiplier `y = 1`; `(−1, 0)` is the other
/// (maximizing) stationary point.
#[derive(Clone, Debug)]
pub struct CircleProblem {
    pub noise_sigma: f64,
    pub start: [f64; 2],
}

impl Default for CircleProblem {
    fn default() -> Self {
        Self {
            noise_sigma: 0.0,
            start: [0.5, 1.2],
        }
    }
}

impl CircleProblem {
    pub fn new(noise_sigma: f64) -> Self {
        Self {
            noise_sigma,
            ..Self::default()
        }
    }
}

impl Problem for CircleProblem {
    fn name(&self) -> &str {
        "circle"
    }

    fn dim(&self) -> usize {
        2
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn initial_point(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.start.to_vec()
    }

    fn objective(&self, x: &[f64], _batch: &Batch) -> Result<(f64, Vec<f64>), ProblemError> {
        check_dim(2, x)?;
        let f = (x[0] - 2.0).powi(2) + x[1] * x[1];
        Ok((f, vec![2.0 * (x[0] - 2.0), 2.0 * x[1]]))
    }

    fn constraints(&self, x: &[f64]) -> Result<(Vec<f64>, DenseMatrix), ProblemError> {
        check_dim(2, x)?;
        let c = x[0] * x[0] + x[1] * x[1] - 1.0;
        let jac = DenseMatrix::from_row_major(1, 2, vec![2.0 * x[0], 2.0 * x[1]])?;
        Ok((vec![c], jac))
    }

    fn gradient_noise(&self) -> f64 {
        self.noise_sigma
    }
}

/// `min ½‖x‖²  s.t.  x₁ + x₂ = 1`, minimizer `(½, ½)` with `y = −½`.
#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub noise_sigma: f64,
    pub start: [f64; 2],
}

impl Default for LinearProblem {
    fn default() -> Self {
        Self {
            noise_sigma: 0.0,
            start: [2.0, -1.5],
        }
    }
}

impl LinearProblem {
    pub fn new(noise_sigma: f64) -> Self {
        Self {
            noise_sigma,
            ..Self::default()
        }
    }
}

impl Problem for LinearProblem {
    fn name(&self) -> &str {
        "linear"
    }

    fn dim(&self) -> usize {
        2
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn initial_point(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.start.to_vec()
    }

    fn objective(&self, x: &[f64], _batch: &Batch) -> Result<(f64, Vec<f64>), ProblemError> {
        check_dim(2, x)?;
        Ok((0.5 * (x[0] * x[0] + x[1] * x[1]), x.to_vec()))
    }

    fn constraints(&self, x: &[f64]) -> Result<(Vec<f64>, DenseMatrix), ProblemError> {
        check_dim(2, x)?;
        let jac = DenseMatrix::from_row_major(1, 2, vec![1.0, 1.0])?;
        Ok((vec![x[0] + x[1] - 1.0], jac))
    }

    fn gradient_noise(&self) -> f64 {
        self.noise_sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm2, project_null};
    use rand::SeedableRng;

    #[test]
    fn circle_kkt_point() {
        let p = CircleProblem::default();
        let x = [1.0, 0.0];
        let (_, g) = p.objective(&x, &Batch::Full).unwrap();
        let (c, j) = p.constraints(&x).unwrap();
        assert_eq!(c, vec![0.0]);
        assert_eq!(norm2(&project_null(&j, &g).unwrap()), 0.0);
        // ∇f + Jᵀy = 0 with y = 1: (−2, 0) + (2, 0)
        assert_eq!(g[0] + 1.0 * j[(0, 0)], 0.0);
    }

    #[test]
    fn circle_projection_at_north_pole() {
        let p = CircleProblem::default();
        let x = [0.0, 1.0];
        let (_, g) = p.objective(&x, &Batch::Full).unwrap();
        let (c, j) = p.constraints(&x).unwrap();
        assert_eq!(c, vec![0.0]);
        assert_eq!(g, vec![-4.0, 2.0]);
        assert_eq!(norm2(&project_null(&j, &g).unwrap()), 4.0);
    }

    #[test]
    fn noiseless_evaluations_repeat() {
        let p = CircleProblem::new(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = p.evaluate(&[0.3, 0.4], &Batch::Full, &mut rng).unwrap();
        let b = p.evaluate(&[0.3, 0.4], &Batch::Full, &mut rng).unwrap();
        assert_eq!(a, b);
        let noisy = CircleProblem::new(0.1);
        let c = noisy.evaluate(&[0.3, 0.4], &Batch::Full, &mut rng).unwrap();
        assert_ne!(a.g, c.g);
        assert_eq!(a.c, c.c);
    }

    #[test]
    fn linear_kkt_point() {
        let p = LinearProblem::default();
        let x = [0.5, 0.5];
        let (f, g) = p.objective(&x, &Batch::Full).unwrap();
        let (c, j) = p.constraints(&x).unwrap();
        assert_eq!(f, 0.25);
        assert_eq!(c, vec![0.0]);
        // ∇f + Jᵀy = 0 with y = −½
        assert_eq!(g[0] - 0.5 * j[(0, 0)], 0.0);
        assert_eq!(g[1] - 0.5 * j[(0, 1)], 0.0);
        // J does not depend on x
        assert_eq!(p.constraints(&[7.0, -3.0]).unwrap().1, j);
    }

    #[test]
    fn dimension_checked() {
        assert!(CircleProblem::default().objective(&[1.0], &Batch::Full).is_err());
        assert!(LinearProblem::default().constraints(&[1.0, 2.0, 3.0]).is_err());
    }
}
