use super::{DenseMatrix, LinalgError};

/// Relative symmetry tolerance accepted by [`CholeskyFactor::factor`].
pub const SYMMETRY_TOL: f64 = 1e-10;

const PIVOT_FLOOR: f64 = 4.0 * f64::EPSILON;

/// Lower-triangular factor `L` with `L Lᵀ = A`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    dim: usize,
    // Row-major dim x dim; strictly upper part is zero.
    lower: Vec<f64>,
}

impl CholeskyFactor {
    /// Factors a symmetric positive-definite matrix. Fails on the first
    /// pivot that is non-positive up to rounding.
    pub fn factor(a: &DenseMatrix) -> Result<Self, LinalgError> {
        Self::factor_shifted(a, 0.0)
    }

    /// Factors `A + δI` with `δ = 1e-10 · trace(A) / dim`.
    pub fn factor_with_jitter(a: &DenseMatrix) -> Result<Self, LinalgError> {
        let n = a.rows().max(1);
        let delta = 1e-10 * a.trace() / n as f64;
        Self::factor_shifted(a, delta.max(0.0))
    }

    fn factor_shifted(a: &DenseMatrix, shift: f64) -> Result<Self, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: a.cols(),
            });
        }
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        let scale = a.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(LinalgError::NotSymmetric { row: i, col: j });
                }
            }
        }

        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let diag = a[(j, j)] + shift;
            let mut d = diag;
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            // Pivots at rounding level of the original diagonal are zero.
            if !(d > PIVOT_FLOOR * n as f64 * diag.abs()) {
                return Err(LinalgError::NotPositiveDefinite { pivot: j });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { dim: n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `L[i][j]` for `j <= i`.
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<(), LinalgError> {
        let n = self.dim;
        if x.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        let l = &self.lower;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Ok(())
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dim;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.lower(i, k) * self.lower(j, k)).sum();
                a[(i, j)] = s;
                a[(j, i)] = s;
            }
        }
        a
    }
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    CholeskyFactor::factor(a)?.solve(b)
}
