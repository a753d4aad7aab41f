use super::{DenseMatrix, LinalgError};

/// Solves the saddle-point system
///
/// ```text
/// [ I  Jᵀ ] [ s ]     [ q ]
/// [ J  0  ] [ y ] = − [ c ]
/// ```
///
/// by Gaussian elimination with partial pivoting on the assembled
/// `(n + m) × (n + m)` matrix. It never touches the `J Jᵀ` factorization, so
/// it can check the decomposed step `s = v + u`.
///
/// A (numerically) singular pivot means `J` is rank deficient and is reported
/// as [`LinalgError::NotPositiveDefinite`], matching the decomposed path.
pub fn kkt_solve_direct(
    jac: &DenseMatrix,
    q: &[f64],
    c: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    let (m, n) = (jac.rows(), jac.cols());
    if q.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: q.len(),
        });
    }
    if c.len() != m {
        return Err(LinalgError::DimensionMismatch {
            expected: m,
            found: c.len(),
        });
    }
    let dim = n + m;
    let mut a = DenseMatrix::zeros(dim, dim);
    for i in 0..n {
        a[(i, i)] = 1.0;
    }
    for r in 0..m {
        for j in 0..n {
            let v = jac[(r, j)];
            a[(n + r, j)] = v;
            a[(j, n + r)] = v;
        }
    }
    let mut rhs: Vec<f64> = q.iter().chain(c).map(|x| -x).collect();

    let scale = a.max_abs().max(1.0);
    for col in 0..dim {
        let (piv, best) = (col..dim)
            .map(|r| (r, a[(r, col)].abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= 1e-13 * scale {
            return Err(LinalgError::NotPositiveDefinite {
                pivot: col.saturating_sub(n),
            });
        }
        if piv != col {
            for j in 0..dim {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
            rhs.swap(col, piv);
        }
        let d = a[(col, col)];
        for r in col + 1..dim {
            let f = a[(r, col)] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..dim {
                a[(r, j)] -= f * a[(col, j)];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; dim];
    for i in (0..dim).rev() {
        let mut s = rhs[i];
        for j in i + 1..dim {
            s -= a[(i, j)] * x[j];
        }
        x[i] = s / a[(i, i)];
    }
    let y = x.split_off(n);
    Ok((x, y))
}
