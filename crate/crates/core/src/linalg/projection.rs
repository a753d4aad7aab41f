use super::{CholeskyFactor, DenseMatrix, LinalgError};

/// A factored `J Jᵀ` for one Jacobian, reused for the normal step and every
/// null-space projection taken at the same iterate.
///
/// With zero constraint rows the projection is the identity and the normal
/// step is zero.
#[derive(Debug)]
pub struct NullSpace<'a> {
    jac: &'a DenseMatrix,
    gram: Option<CholeskyFactor>,
}

impl<'a> NullSpace<'a> {
    pub fn new(jac: &'a DenseMatrix) -> Result<Self, LinalgError> {
        Self::build(jac, false)
    }

    /// Same as [`NullSpace::new`] but factors `J Jᵀ + δI` with a trace-scaled
    /// `δ`, so a numerically rank-deficient Jacobian still yields a step.
    pub fn with_jitter(jac: &'a DenseMatrix) -> Result<Self, LinalgError> {
        Self::build(jac, true)
    }

    pub fn build(jac: &'a DenseMatrix, jitter: bool) -> Result<Self, LinalgError> {
        let (m, n) = (jac.rows(), jac.cols());
        if m == 0 {
            return Ok(Self { jac, gram: None });
        }
        if m >= n {
            return Err(LinalgError::TooManyConstraints { m, n });
        }
        let g = jac.gram();
        let gram = if jitter {
            CholeskyFactor::factor_with_jitter(&g)?
        } else {
            CholeskyFactor::factor(&g)?
        };
        Ok(Self {
            jac,
            gram: Some(gram),
        })
    }

    pub fn jacobian(&self) -> &DenseMatrix {
        self.jac
    }

    /// `Jᵀ (J Jᵀ)⁻¹ J q`, the range-space part of `q`.
    pub fn range_part(&self, q: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.jac.cols();
        if q.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: q.len(),
            });
        }
        match &self.gram {
            None => Ok(vec![0.0; n]),
            Some(f) => {
                let mut w = self.jac.matvec(q)?;
                f.solve_in_place(&mut w)?;
                self.jac.matvec_t(&w)
            }
        }
    }

    /// `P q = q − Jᵀ (J Jᵀ)⁻¹ J q`.
    ///
    /// The projection is applied a second time to the result, which removes
    /// the rounding-level range-space component left by the first pass when
    /// `‖q‖` is large compared with `‖Pq‖`.
    pub fn project(&self, q: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut p = self.range_part(q)?;
        for (pi, qi) in p.iter_mut().zip(q) {
            *pi = qi - *pi;
        }
        if self.gram.is_some() {
            let r = self.range_part(&p)?;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi -= ri;
            }
        }
        Ok(p)
    }

    /// `v = −ρ Jᵀ (J Jᵀ)⁻¹ c`.
    pub fn normal_step(&self, c: &[f64], rho: f64) -> Result<Vec<f64>, LinalgError> {
        let (m, n) = (self.jac.rows(), self.jac.cols());
        if c.len() != m {
            return Err(LinalgError::DimensionMismatch {
                expected: m,
                found: c.len(),
            });
        }
        match &self.gram {
            None => Ok(vec![0.0; n]),
            Some(f) => {
                let mut w: Vec<f64> = c.iter().map(|ci| -rho * ci).collect();
                f.solve_in_place(&mut w)?;
                self.jac.matvec_t(&w)
            }
        }
    }

    /// The explicit projector `I − Jᵀ (J Jᵀ)⁻¹ J`. O(n²) memory; meant for
    /// checks and small problems.
    pub fn projector(&self) -> Result<DenseMatrix, LinalgError> {
        let n = self.jac.cols();
        let mut p = DenseMatrix::identity(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let r = self.range_part(&e)?;
            for i in 0..n {
                p[(i, j)] -= r[i];
            }
            e[j] = 0.0;
        }
        Ok(p)
    }
}

/// `P q` for a full-row-rank `J`.
pub fn project_null(jac: &DenseMatrix, q: &[f64]) -> Result<Vec<f64>, LinalgError> {
    NullSpace::new(jac)?.project(q)
}

/// `v = −ρ Jᵀ (J Jᵀ)⁻¹ c`, satisfying `J v = −ρ c`.
pub fn normal_step(jac: &DenseMatrix, c: &[f64], rho: f64) -> Result<Vec<f64>, LinalgError> {
    NullSpace::new(jac)?.normal_step(c, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_rows(&[v.to_vec()]).unwrap()
    }

    #[test]
    fn axis_aligned_projection() {
        let j = row(&[1.0, 0.0]);
        assert_eq!(project_null(&j, &[3.0, 5.0]).unwrap(), vec![0.0, 5.0]);
        assert_eq!(project_null(&j, &[7.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn normal_step_simple_cases() {
        let j = row(&[1.0, 0.0]);
        assert_eq!(normal_step(&j, &[2.0], 1.0).unwrap(), vec![-2.0, 0.0]);
        let j = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.5, -1.0, 4.0]]).unwrap();
        assert_eq!(normal_step(&j, &[0.0, 0.0], 0.3).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn zero_rows_is_identity() {
        let j = DenseMatrix::zeros(0, 3);
        let ns = NullSpace::new(&j).unwrap();
        assert_eq!(ns.project(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(ns.normal_step(&[], 1.0).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn square_jacobian_rejected() {
        let j = DenseMatrix::identity(2);
        assert!(matches!(
            NullSpace::new(&j),
            Err(LinalgError::TooManyConstraints { m: 2, n: 2 })
        ));
    }

    #[test]
    fn rank_deficient_is_reported() {
        let j = DenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]).unwrap();
        assert!(matches!(
            project_null(&j, &[1.0, 0.0, 0.0]),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
        let ns = NullSpace::with_jitter(&j).unwrap();
        let p = ns.project(&[1.0, 0.0, 0.0]).unwrap();
        assert!(p.iter().all(|x| x.is_finite()));
    }
}
