use msqp_core::linalg::{dot, kkt_solve_direct, norm2, norm_inf, smallest_singular_value, DenseMatrix, NullSpace};
use msqp_core::metrics::{merit, tau_from_constants, TauConstants};
use msqp_core::optimizers::{
    adam_con_step, adam_sqp_step, adam_unc_step, bias_correction, heavyball_step, sqp_step, AdamState,
    HeavyBallState,
};
use msqp_core::{CommonHyper, Optimizer, OptimizerKind, ProblemEval, Schedule};
use proptest::collection::vec;
use proptest::prelude::*;

fn jacobian(m: usize, n: usize) -> impl Strategy<Value = DenseMatrix> {
    vec(-2.0..2.0f64, m * n)
        .prop_map(move |d| DenseMatrix::from_row_major(m, n, d).unwrap())
        .prop_filter("well conditioned", |j| smallest_singular_value(j).unwrap() > 1e-2)
}

fn eval(m: usize, n: usize) -> impl Strategy<Value = ProblemEval> {
    (jacobian(m, n), vec(-3.0..3.0f64, n), vec(-1.0..1.0f64, m)).prop_map(|(jac, g, c)| ProblemEval {
        f_est: 0.0,
        g,
        c,
        jac,
    })
}

/// A run of evaluations with fixed `m < n` and a fresh Jacobian each step.
fn trajectory() -> impl Strategy<Value = (usize, Vec<ProblemEval>)> {
    (1usize..=4, 0usize..=8).prop_flat_map(|(m, extra)| {
        let n = m + 1 + extra;
        (Just(n), vec(eval(m, n), 1..=8))
    })
}

fn hyper() -> impl Strategy<Value = CommonHyper> {
    (0.0..0.99f64, 0.0..0.95f64, 0.05..=1.0f64, 0.2..5.0f64).prop_map(|(beta, beta1, rho, h)| {
        CommonHyper {
            beta,
            beta1,
            beta2: 0.999,
            rho: Schedule::Constant(rho),
            h: Schedule::Constant(h),
            ..CommonHyper::default()
        }
    })
}

fn feasibility_ratio(e: &ProblemEval, d: &[f64], rho: f64) -> f64 {
    let jd = e.jac.matvec(d).unwrap();
    let r: Vec<f64> = jd.iter().zip(&e.c).map(|(a, c)| a + rho * c).collect();
    norm_inf(&r) / (1.0 + norm_inf(&e.c))
}

const CONSTRAINED: [OptimizerKind; 4] = [
    OptimizerKind::Sqp,
    OptimizerKind::SqpHeavyball,
    OptimizerKind::SqpAdam,
    OptimizerKind::AdamCon,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_is_an_orthogonal_projection(
        (m, n, j, q) in (1usize..=4, 0usize..=8).prop_flat_map(|(m, extra)| {
            let n = m + 1 + extra;
            (Just(m), Just(n), jacobian(m, n), vec(-5.0..5.0f64, n))
        })
    ) {
        let ns = NullSpace::new(&j).unwrap();
        let p = ns.projector().unwrap();
        for a in 0..n {
            for b in 0..n {
                prop_assert!((p[(a, b)] - p[(b, a)]).abs() < 1e-12);
            }
        }
        let pq = ns.project(&q).unwrap();
        let ppq = ns.project(&pq).unwrap();
        let diff: Vec<f64> = pq.iter().zip(&ppq).map(|(a, b)| a - b).collect();
        prop_assert!(norm2(&diff) <= 1e-10 * norm2(&q).max(1.0));
        prop_assert!(norm_inf(&j.matvec(&pq).unwrap()) <= 1e-10 * norm2(&q).max(1.0));
        // q − Pq lies in range(Jᵀ), hence is orthogonal to Pq.
        let rest: Vec<f64> = q.iter().zip(&pq).map(|(a, b)| a - b).collect();
        prop_assert!(dot(&rest, &pq).abs() <= 1e-10 * norm2(&q).powi(2).max(1.0));
        prop_assert!(norm2(&pq) <= norm2(&q) * (1.0 + 1e-12));
        prop_assert_eq!(m, j.rows());
    }

    #[test]
    fn decomposition_equals_kkt_solution((_, evals) in trajectory()) {
        for e in &evals {
            let ns = NullSpace::new(&e.jac).unwrap();
            let v = ns.normal_step(&e.c, 1.0).unwrap();
            let pg = ns.project(&e.g).unwrap();
            let (s, _) = kkt_solve_direct(&e.jac, &e.g, &e.c).unwrap();
            for i in 0..s.len() {
                prop_assert!((v[i] - pg[i] - s[i]).abs() <= 1e-7 * norm2(&s).max(1.0));
            }
        }
    }

    #[test]
    fn every_constrained_stepper_keeps_linearized_feasibility(
        (n, evals) in trajectory(),
        hyper in hyper(),
    ) {
        for kind in CONSTRAINED {
            let mut opt = Optimizer::new(kind, n);
            for e in &evals {
                let step = opt.step(e, &hyper).unwrap();
                prop_assert!(feasibility_ratio(e, &step.d, step.rho) <= 1e-7, "{kind}");
            }
        }
    }

    #[test]
    fn normal_and_tangential_parts_are_orthogonal((n, evals) in trajectory(), hyper in hyper()) {
        for kind in [OptimizerKind::SqpHeavyball, OptimizerKind::SqpAdam] {
            let mut opt = Optimizer::new(kind, n);
            for e in &evals {
                let step = opt.step(e, &hyper).unwrap();
                let t: Vec<f64> = step.d.iter().zip(&step.v).map(|(d, v)| d - v).collect();
                let scale = norm2(&step.v) * norm2(&t);
                prop_assert!(dot(&step.v, &t).abs() <= 1e-8 * scale.max(1e-300) + 1e-300);
            }
        }
    }

    #[test]
    fn heavy_ball_momentum_is_the_discounted_sum_of_steps((n, evals) in trajectory(), hyper in hyper()) {
        let mut state = HeavyBallState::new(n);
        let mut us: Vec<Vec<f64>> = Vec::new();
        for e in &evals {
            let ns = NullSpace::new(&e.jac).unwrap();
            let h = hyper.h.at(state.k + 1);
            us.push(ns.project(&e.g).unwrap().iter().map(|x| -x / h).collect());
            state = heavyball_step(state, e, &hyper).unwrap().1;
        }
        let k = us.len();
        for c in 0..n {
            let want: f64 = us.iter().enumerate().map(|(i, u)| hyper.beta.powi((k - 1 - i) as i32) * u[c]).sum();
            prop_assert!((state.r[c] - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn adam_second_moment_stays_below_cap(
        gs in vec(vec(-1.0..1.0f64, 3), 1..200),
        bound in 0.01..100.0f64,
        beta2 in 0.5..0.9999f64,
    ) {
        let hyper = CommonHyper { beta1: 0.0, beta2, ..CommonHyper::default() };
        let mut state = AdamState::new(3);
        let cap = bound * bound / (1.0 - beta2);
        for g in &gs {
            let g: Vec<f64> = g.iter().map(|x| x * bound).collect();
            state = adam_unc_step(state, &g, &hyper).unwrap().1;
            prop_assert!(state.s.iter().all(|&s| s <= cap * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn projection_free_moments_differ_by_row_space_parts((n, evals) in trajectory()) {
        let hyper = CommonHyper::default();
        let mut con = AdamState::new(n);
        let mut sqp = AdamState::new(n);
        let mut row_parts = vec![0.0; n];
        for e in &evals {
            let ns = NullSpace::new(&e.jac).unwrap();
            let pg = ns.project(&e.g).unwrap();
            for i in 0..n {
                row_parts[i] = hyper.beta1 * row_parts[i] - (e.g[i] - pg[i]);
            }
            let (step, next) = adam_con_step(con, e, &hyper).unwrap();
            con = next;
            sqp = adam_sqp_step(sqp, e, &hyper).unwrap().1;
            prop_assert!(feasibility_ratio(e, &step.d, step.rho) <= 1e-7);
        }
        for i in 0..n {
            prop_assert!((con.r[i] - sqp.r[i] - row_parts[i]).abs() <= 1e-10 * row_parts[i].abs().max(1.0));
        }
    }

    #[test]
    fn first_adam_step_closed_form((_, evals) in trajectory()) {
        let hyper = CommonHyper::default();
        let e = &evals[0];
        let n = e.g.len();
        let (step, state) = adam_sqp_step(AdamState::new(n), e, &hyper).unwrap();
        let ns = NullSpace::new(&e.jac).unwrap();
        let u: Vec<f64> = ns.project(&e.g).unwrap().iter().map(|x| -x).collect();
        prop_assert_eq!(&state.r, &u);
        let w: Vec<f64> = u.iter().map(|x| x / (x * x + hyper.eps).sqrt()).collect();
        let t = ns.project(&w).unwrap();
        let v = ns.normal_step(&e.c, 1.0).unwrap();
        for i in 0..n {
            let want = v[i] + (1.0 - hyper.beta1) * t[i];
            prop_assert!((step.d[i] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn bias_correction_is_nondecreasing(beta1 in 0.0..0.99f64, b in 0.0..1.0f64, k in 1u64..100_000) {
        let beta2 = beta1 + (1.0 - beta1) * b.min(0.999_999);
        prop_assume!(beta2 > beta1 && beta2 < 1.0);
        prop_assert!(bias_correction(k + 1, beta1, beta2) >= bias_correction(k, beta1, beta2));
    }

    #[test]
    fn tau_balances_the_merit_parameter_identity(
        sigma in 0.01..100.0f64,
        rho_max in 0.01..=1.0f64,
        frac in 0.01..=1.0f64,
        kappa in 0.0..100.0f64,
    ) {
        let k = TauConstants::new(sigma, rho_max * frac, rho_max, kappa).unwrap();
        let tau = tau_from_constants(&k);
        prop_assert!(tau > 0.0 && tau <= 1.0);
        let lhs = 1.0 - tau * kappa * rho_max / (sigma * rho_max * frac);
        prop_assert!((lhs - tau).abs() <= 1e-12);
    }

    #[test]
    fn merit_is_linear_in_tau(f in -10.0..10.0f64, c in vec(-1.0..1.0f64, 0..5), t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
        let l1: f64 = c.iter().map(|x| x.abs()).sum();
        prop_assert!((merit(f, &c, t1) - merit(f, &c, t2) - (t1 - t2) * f).abs() < 1e-12);
        prop_assert!((merit(f, &c, 0.0) - l1).abs() < 1e-12);
    }

    #[test]
    fn optimizer_state_round_trips((n, evals) in trajectory(), kind_idx in 0usize..5) {
        let kind = OptimizerKind::ALL[kind_idx];
        let mut opt = Optimizer::new(kind, n);
        for e in &evals {
            opt.step(e, &CommonHyper::default()).unwrap();
        }
        let mut buf = Vec::new();
        opt.write_state(&mut buf).unwrap();
        let back = Optimizer::read_state(buf.as_slice()).unwrap();
        prop_assert_eq!(back.kind(), kind);
        prop_assert_eq!(back.iterations(), opt.iterations());
        prop_assert_eq!(back.heavyball_state(), opt.heavyball_state());
        prop_assert_eq!(back.adam_state(), opt.adam_state());
    }
}

#[test]
fn heavy_ball_without_momentum_reproduces_kkt_steps() {
    use msqp_core::metrics::exact_eval;
    use msqp_core::CircleProblem;

    let problem = CircleProblem::default();
    let hyper = CommonHyper {
        beta: 0.0,
        alpha: 0.1,
        ..CommonHyper::default()
    };
    let mut x = problem.start.to_vec();
    let mut state = HeavyBallState::new(2);
    for k in 1..=50 {
        let e = exact_eval(&problem, &x).unwrap();
        let (step, next) = heavyball_step(state, &e, &hyper).unwrap();
        state = next;
        let (s, _) = kkt_solve_direct(&e.jac, &e.g, &e.c).unwrap();
        let plain = sqp_step(k, &e, &hyper).unwrap();
        for i in 0..2 {
            assert!((step.d[i] - s[i]).abs() <= 1e-7 * norm2(&s).max(1.0), "k = {k}");
            assert_eq!(step.d[i], plain.d[i]);
        }
        for (xi, di) in x.iter_mut().zip(&step.d) {
            *xi += hyper.alpha * di;
        }
    }
}

#[test]
fn first_unconstrained_adam_step_by_hand() {
    let hyper = CommonHyper::default();
    let (step, _) = adam_unc_step(AdamState::new(1), &[1.0], &hyper).unwrap();
    let want = -(1.0 - hyper.beta1) / (1.0 + hyper.eps).sqrt();
    assert!((step.d[0] - want).abs() < 1e-15);
    assert_eq!(step.eta, Some(1.0 - hyper.beta1));
}
