//! Null-space operators checked against explicit matrices built with an
//! independent Gauss-Jordan inverse.

use msqp_core::linalg::{kkt_solve_direct, norm2, DenseMatrix, LinalgError, NullSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        let d = aug[col][col];
        assert!(d.abs() > 1e-14, "singular");
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                let pivot_row = aug[col].clone();
                for (v, p) in aug[r].iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

struct Explicit {
    /// `Jᵀ (J Jᵀ)⁻¹`, n × m.
    pinv: Vec<Vec<f64>>,
    /// `I − Jᵀ (J Jᵀ)⁻¹ J`, n × n.
    p: Vec<Vec<f64>>,
}

fn explicit(j: &[Vec<f64>]) -> Explicit {
    let (m, n) = (j.len(), j[0].len());
    let gram: Vec<Vec<f64>> = (0..m)
        .map(|a| (0..m).map(|b| (0..n).map(|k| j[a][k] * j[b][k]).sum()).collect())
        .collect();
    let ginv = gauss_jordan_inverse(&gram);
    let pinv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..m).map(|b| (0..m).map(|a| j[a][i] * ginv[a][b]).sum()).collect())
        .collect();
    let p = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    let id = if i == k { 1.0 } else { 0.0 };
                    id - (0..m).map(|b| pinv[i][b] * j[b][k]).sum::<f64>()
                })
                .collect()
        })
        .collect();
    Explicit { pinv, p }
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b).max(1.0)
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let m = rng.random_range(1..=5);
    let n = rng.random_range((m + 1).max(2)..=20);
    let j = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let q = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let c = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
    (j, q, c)
}

#[test]
fn projection_and_normal_step_match_explicit_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..100 {
        let (j, q, c) = random_instance(&mut rng);
        let jm = DenseMatrix::from_rows(&j).unwrap();
        let ns = NullSpace::new(&jm).unwrap();
        let ex = explicit(&j);

        assert!(rel_err(&ns.project(&q).unwrap(), &matvec(&ex.p, &q)) < 1e-10);
        let rho = rng.random_range(0.1..=1.0);
        let v_ex: Vec<f64> = matvec(&ex.pinv, &c).iter().map(|x| -rho * x).collect();
        assert!(rel_err(&ns.normal_step(&c, rho).unwrap(), &v_ex) < 1e-10);

        let p = ns.projector().unwrap();
        for (i, row) in ex.p.iter().enumerate() {
            for (k, want) in row.iter().enumerate() {
                assert!((p[(i, k)] - want).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn decomposed_step_matches_direct_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..100 {
        let (j, q, c) = random_instance(&mut rng);
        let jm = DenseMatrix::from_rows(&j).unwrap();
        let ns = NullSpace::new(&jm).unwrap();
        let (s, _) = kkt_solve_direct(&jm, &q, &c).unwrap();
        let v = ns.normal_step(&c, 1.0).unwrap();
        let pq = ns.project(&q).unwrap();
        let vu: Vec<f64> = v.iter().zip(&pq).map(|(a, b)| a - b).collect();
        assert!(rel_err(&vu, &s) < 1e-7);

        // Replacing q by Pq leaves s unchanged.
        let (s_p, _) = kkt_solve_direct(&jm, &pq, &c).unwrap();
        assert!(rel_err(&s_p, &s) < 1e-10);
    }
}

#[test]
fn kkt_multiplier_satisfies_stationarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..20 {
        let (j, q, c) = random_instance(&mut rng);
        let jm = DenseMatrix::from_rows(&j).unwrap();
        let (s, y) = kkt_solve_direct(&jm, &q, &c).unwrap();
        // s + Jᵀy = −q and J s = −c.
        let jty = jm.matvec_t(&y).unwrap();
        for i in 0..s.len() {
            assert!((s[i] + jty[i] + q[i]).abs() < 1e-9);
        }
        for (js, ci) in jm.matvec(&s).unwrap().iter().zip(&c) {
            assert!((js + ci).abs() < 1e-9);
        }
    }
}

#[test]
fn rank_deficient_jacobians_are_rejected_by_both_paths() {
    let j = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
    assert!(matches!(
        NullSpace::new(&j),
        Err(LinalgError::NotPositiveDefinite { .. })
    ));
    assert!(matches!(
        kkt_solve_direct(&j, &[1.0, 0.0, 0.0], &[0.0, 0.0]),
        Err(LinalgError::NotPositiveDefinite { .. })
    ));
    assert!(NullSpace::with_jitter(&j).is_ok());
}

#[test]
fn circle_tangent_projection_by_hand() {
    // At (0, 1) the Jacobian of x₁² + x₂² − 1 is (0, 2); P keeps the x₁ axis.
    let j = DenseMatrix::from_rows(&[vec![0.0, 2.0]]).unwrap();
    let ns = NullSpace::new(&j).unwrap();
    let pg = ns.project(&[-4.0, 2.0]).unwrap();
    assert_eq!(pg, vec![-4.0, 0.0]);
    assert_eq!(norm2(&pg), 4.0);
}
