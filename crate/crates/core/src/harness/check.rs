//! Built-in oracle suite behind `msqp check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Budget, ExperimentConfig, ProblemId};
use super::run::run_on;
use crate::linalg::{kkt_solve_direct, norm2, norm_inf, DenseMatrix, NullSpace};
use crate::metrics::{exact_eval, tau_from_constants, TauConstants};
use crate::model::MlpSpec;
use crate::optimizers::{bias_correction, heavyball_step, sqp_step, CommonHyper, HeavyBallState, OptimizerKind};
use crate::problems::{Batch, CircleProblem, Problem, SpringConfig, SpringProblem};
use crate::series::all_bounds;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, worst: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_jacobian(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_row_major(m, n, uniform_vec(rng, m * n)).expect("finite entries")
}

fn decomposition_vs_kkt() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(1..=5);
        let n = rng.random_range(m + 1..=20.max(m + 1));
        let j = random_jacobian(&mut rng, m, n);
        let (q, c) = (uniform_vec(&mut rng, n), uniform_vec(&mut rng, m));
        let Ok((s, _)) = kkt_solve_direct(&j, &q, &c) else {
            return result("decomposition matches direct KKT", f64::INFINITY, 1e-7);
        };
        let ns = NullSpace::new(&j).expect("random J has full row rank");
        let v = ns.normal_step(&c, 1.0).unwrap();
        let pq = ns.project(&q).unwrap();
        let diff: Vec<f64> = s.iter().zip(v.iter().zip(&pq)).map(|(s, (v, p))| s - (v - p)).collect();
        worst = worst.max(norm2(&diff) / (1.0 + norm2(&s)));
    }
    result("decomposition matches direct KKT", worst, 1e-7)
}

fn projection_properties() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (m, n) = (rng.random_range(1..=4), rng.random_range(6..=12));
        let j = random_jacobian(&mut rng, m, n);
        let ns = NullSpace::new(&j).unwrap();
        let p = ns.projector().unwrap();
        let sym = (0..n)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .map(|(i, k)| (p[(i, k)] - p[(k, i)]).abs())
            .fold(0.0, f64::max);
        let q = uniform_vec(&mut rng, n);
        let once = ns.project(&q).unwrap();
        let twice = ns.project(&once).unwrap();
        let idem = norm2(&once.iter().zip(&twice).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm2(&q);
        let jp = norm_inf(&j.matvec(&once).unwrap()) / norm_inf(&q).max(1.0);
        worst = worst.max(sym).max(idem).max(jp);
    }
    result("projection symmetric, idempotent, in null(J)", worst, 1e-8)
}

fn spring_gradient_fd() -> CheckResult {
    let problem = SpringProblem::new(SpringConfig::default(), MlpSpec::new(vec![1, 8, 8, 1]).unwrap())
        .expect("default spring");
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let x = problem.initial_point(&mut rng);
        let (_, g) = problem.objective(&x, &Batch::Full).unwrap();
        let (_, jac) = problem.constraints(&x).unwrap();
        let h = 1e-6;
        let mut fd_g = vec![0.0; x.len()];
        let mut fd_j = vec![vec![0.0; x.len()]; jac.rows()];
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            fd_g[i] = (problem.objective_value(&xp).unwrap() - problem.objective_value(&xm).unwrap()) / (2.0 * h);
            let (cp, cm) = (problem.constraint_values(&xp).unwrap(), problem.constraint_values(&xm).unwrap());
            for (r, row) in fd_j.iter_mut().enumerate() {
                row[i] = (cp[r] - cm[r]) / (2.0 * h);
            }
        }
        let err = |a: &[f64], b: &[f64]| {
            norm_inf(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()) / (1.0 + norm_inf(b))
        };
        worst = worst.max(err(&g, &fd_g));
        for (r, row) in fd_j.iter().enumerate() {
            worst = worst.max(err(jac.row(r), row));
        }
    }
    result("spring gradient and Jacobian vs finite differences", worst, 1e-5)
}

fn jets_fd() -> CheckResult {
    let spec = MlpSpec::new(vec![1, 8, 8, 1]).unwrap();
    let theta = spec.init_params(14);
    let mut worst: f64 = 0.0;
    for t in [-0.7, 0.0, 0.3, 1.1] {
        let [_, d1, d2] = spec.eval_jet(&theta, t).unwrap();
        let h = 1e-4;
        let u = |s: f64| spec.forward(&theta, &[s]).unwrap()[0];
        let fd1 = (u(t + h) - u(t - h)) / (2.0 * h);
        let fd2 = (u(t + h) - 2.0 * u(t) + u(t - h)) / (h * h);
        worst = worst
            .max((d1 - fd1).abs() / fd1.abs().max(1.0))
            .max((d2 - fd2).abs() / fd2.abs().max(1.0));
    }
    result("input jets vs finite differences", worst, 1e-4)
}

fn tau_identity() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho_max: f64 = rng.random_range(0.01..=1.0);
        let k = TauConstants::new(
            rng.random_range(0.01..10.0),
            rho_max * rng.random_range(0.01..=1.0),
            rho_max,
            rng.random_range(0.01..10.0),
        )
        .unwrap();
        let tau = tau_from_constants(&k);
        let lhs = 1.0 - tau * k.kappa_grad * k.rho_max / (k.sigma_min * k.rho_min);
        worst = worst.max((lhs - tau).abs());
    }
    result("merit parameter identity", worst, 1e-12)
}

fn bias_correction_check() -> CheckResult {
    let (b1, b2) = (0.9, 0.999);
    let mut prev = 0.0;
    let mut monotone = true;
    for k in 1..=20_000 {
        let e = bias_correction(k, b1, b2);
        monotone &= e >= prev;
        prev = e;
    }
    let limit = (1.0 - b1) / (1.0f64 - b2).sqrt();
    let err = (bias_correction(1, b1, b2) - (1.0 - b1)).abs();
    CheckResult {
        name: "bias correction first value and monotonicity",
        passed: monotone && err < 1e-15 && prev < limit,
        detail: format!("eta_1 error {err:.1e}, eta_20000 = {prev:.6} < {limit:.6}"),
    }
}

fn series_check() -> CheckResult {
    let mut failed = Vec::new();
    for beta in [0.5, 0.9, 0.99] {
        for c in all_bounds(beta, 100_000).expect("valid beta") {
            if !c.holds {
                failed.push(format!("{} at beta {beta}", c.name));
            }
        }
    }
    CheckResult {
        name: "series bounds at K = 1e5",
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            "15 bounds hold with positive slack".into()
        } else {
            failed.join("; ")
        },
    }
}

fn heavyball_reduces_to_sqp() -> CheckResult {
    let problem = CircleProblem::default();
    let hyper = CommonHyper {
        beta: 0.0,
        alpha: 0.05,
        ..CommonHyper::default()
    };
    let mut x = problem.start.to_vec();
    let mut state = HeavyBallState::new(2);
    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let eval = exact_eval(&problem, &x).unwrap();
        let (step, next) = heavyball_step(state, &eval, &hyper).unwrap();
        state = next;
        let (s, _) = kkt_solve_direct(&eval.jac, &eval.g, &eval.c).unwrap();
        let plain = sqp_step(k, &eval, &hyper).unwrap();
        let diff = |a: &[f64]| norm2(&a.iter().zip(&step.d).map(|(p, q)| p - q).collect::<Vec<_>>());
        worst = worst.max(diff(&s) / (1.0 + norm2(&s))).max(diff(&plain.d));
        for (xi, di) in x.iter_mut().zip(&step.d) {
            *xi += hyper.alpha * di;
        }
    }
    result("heavy-ball with beta = 0 equals the KKT step", worst, 1e-7)
}

fn circle_convergence() -> CheckResult {
    let mut detail = Vec::new();
    let mut passed = true;
    for kind in [OptimizerKind::SqpAdam, OptimizerKind::SqpHeavyball] {
        let mut cfg = ExperimentConfig::new(ProblemId::Circle, kind, Budget::Iterations(20_000));
        cfg.hyper.alpha = 0.01;
        let out = match run_on(&cfg, &CircleProblem::default()) {
            Ok(o) => o,
            Err(e) => {
                return CheckResult {
                    name: "circle convergence",
                    passed: false,
                    detail: e.to_string(),
                }
            }
        };
        let e = &out.final_entry;
        let hit = out
            .records
            .iter()
            .find(|r| r.proj_grad_sq <= 1e-8 && r.cviol_l1 <= 1e-6)
            .map(|r| r.k)
            .or((e.proj_grad_sq <= 1e-8 && e.cviol_l1 <= 1e-6).then_some(out.iterations + 1));
        let dist = ((out.final_x[0] - 1.0).powi(2) + out.final_x[1].powi(2)).sqrt();
        passed &= hit.is_some() && dist <= 1e-3;
        detail.push(format!(
            "{kind}: tolerances first met at k = {}, final dist {dist:.1e}",
            hit.map_or_else(|| "never".to_string(), |k| k.to_string())
        ));
    }
    CheckResult {
        name: "circle convergence",
        passed,
        detail: detail.join("; "),
    }
}

/// Runs the built-in oracle suite.
pub fn run_checks() -> Vec<CheckResult> {
    vec![
        decomposition_vs_kkt(),
        projection_properties(),
        spring_gradient_fd(),
        jets_fd(),
        tau_identity(),
        bias_correction_check(),
        series_check(),
        heavyball_reduces_to_sqp(),
        circle_convergence(),
    ]
}
