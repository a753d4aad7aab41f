use super::{DenseMatrix, LinalgError};

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    let mut w = a.clone();
    let off = |w: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += w[(i, j)] * w[(i, j)];
                }
            }
        }
        s
    };
    let total: f64 = w.as_slice().iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        if off(&w) <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = w[(k, p)];
                    let akq = w[(k, q)];
                    w[(k, p)] = c * akp - s * akq;
                    w[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[(p, k)];
                    let aqk = w[(q, k)];
                    w[(p, k)] = c * apk - s * aqk;
                    w[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| w[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Smallest singular value of a wide matrix `J` (`m ≤ n`), from the smallest
/// eigenvalue of `J Jᵀ`.
pub fn smallest_singular_value(jac: &DenseMatrix) -> Result<f64, LinalgError> {
    if jac.rows() == 0 {
        return Err(LinalgError::Empty);
    }
    let ev = symmetric_eigenvalues(&jac.gram())?;
    Ok(ev[0].max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_spectrum() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = symmetric_eigenvalues(&a).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_value_of_row() {
        let j = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert!((smallest_singular_value(&j).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn three_by_three_trace_and_det() {
        let a = DenseMatrix::from_rows(&[
            vec![4.0, 1.0, -2.0],
            vec![1.0, 2.0, 0.5],
            vec![-2.0, 0.5, 3.0],
        ])
        .unwrap();
        let ev = symmetric_eigenvalues(&a).unwrap();
        let tr: f64 = ev.iter().sum();
        let det: f64 = ev.iter().product();
        let det_direct = 4.0 * (2.0 * 3.0 - 0.25) - 1.0 * (3.0 + 1.0) + (-2.0) * (0.5 + 4.0);
        assert!((tr - 9.0).abs() < 1e-12);
        assert!((det - det_direct).abs() < 1e-10);
    }
}
