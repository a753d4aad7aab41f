//! Damped mass-spring oscillator learned by a tanh network.
//!
//! The network `u_θ(t)` is fit to a handful of observed positions while the
//! ODE residual `m u″ + μ u′ + k u` is penalized on a grid of times. The
//! constrained formulation additionally requires the residual to vanish
//! exactly at a few constraint times.

use std::cell::RefCell;
use std::io::{self, Write};

use rand_chacha::ChaCha8Rng;

use super::{check_dim, Batch, Problem, ProblemError};
use crate::autodiff::{Jet2, Tape, Var, VarRange};
use crate::linalg::DenseMatrix;
use crate::model::MlpSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct SpringConfig {
    pub mass: f64,
    pub friction: f64,
    pub stiffness: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// Residual times: `n_residual` evenly spaced points on `residual_span`.
    pub n_residual: usize,
    pub residual_span: (f64, f64),
    /// Data times: `n_data` evenly spaced points on `data_span`.
    pub n_data: usize,
    pub data_span: (f64, f64),
    pub constraint_times: Vec<f64>,
    pub residual_weight: f64,
}

impl Default for SpringConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            friction: 4.0,
            stiffness: 400.0,
            amplitude: 0.5,
            phase: 0.0,
            n_residual: 30,
            residual_span: (0.0, 1.0),
            n_data: 10,
            data_span: (0.0, 0.4),
            constraint_times: vec![4.0 / 29.0, 12.0 / 29.0, 21.0 / 29.0],
            residual_weight: 1e-4,
        }
    }
}

fn linspace((a, b): (f64, f64), n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl SpringConfig {
    /// `δ = μ / 2m`.
    pub fn delta(&self) -> f64 {
        self.friction / (2.0 * self.mass)
    }

    /// `w₀ = √(k/m)`.
    pub fn w0(&self) -> f64 {
        (self.stiffness / self.mass).sqrt()
    }

    /// Damped oscillation frequency `√(w₀² − δ²)`.
    pub fn frequency(&self) -> Result<f64, ProblemError> {
        let (w0_sq, delta_sq) = (self.w0().powi(2), self.delta().powi(2));
        if w0_sq <= delta_sq {
            return Err(ProblemError::Overdamped { w0_sq, delta_sq });
        }
        Ok((w0_sq - delta_sq).sqrt())
    }

    pub fn residual_times(&self) -> Vec<f64> {
        linspace(self.residual_span, self.n_residual)
    }

    pub fn data_times(&self) -> Vec<f64> {
        linspace(self.data_span, self.n_data)
    }

    /// `m u″ + μ u′ + k u`.
    pub fn residual(&self, u: f64, du: f64, ddu: f64) -> f64 {
        self.mass * ddu + self.friction * du + self.stiffness * u
    }
}

/// Closed-form under-damped solution `u(t) = e^{−δt} · 2A cos(φ + t√(w₀²−δ²))`.
pub fn spring_exact(t: f64, cfg: &SpringConfig) -> Result<f64, ProblemError> {
    Ok(spring_exact_jet(t, cfg)?[0])
}

/// `(u, u′, u″)` of the closed-form solution.
pub fn spring_exact_jet(t: f64, cfg: &SpringConfig) -> Result<[f64; 3], ProblemError> {
    let w = cfg.frequency()?;
    let d = cfg.delta();
    let amp = 2.0 * cfg.amplitude * (-d * t).exp();
    let (s, c) = (cfg.phase + w * t).sin_cos();
    Ok([
        amp * c,
        amp * (-d * c - w * s),
        amp * ((d * d - w * w) * c + 2.0 * d * w * s),
    ])
}

/// Spring problem: `f = mean data error² + weight · mean residual²` over the
/// (batched) residual times, with constraints `c_i = residual(t_i)` at the
/// constraint times. Constraints are never subsampled.
#[derive(Clone, Debug)]
pub struct SpringProblem {
    cfg: SpringConfig,
    spec: MlpSpec,
    residual_times: Vec<f64>,
    data_times: Vec<f64>,
    data_targets: Vec<f64>,
    with_constraints: bool,
}

thread_local! {
    static SCRATCH: RefCell<(Tape, Vec<f64>)> = RefCell::new((Tape::new(), Vec::new()));
}

impl SpringProblem {
    pub fn new(cfg: SpringConfig, spec: MlpSpec) -> Result<Self, ProblemError> {
        cfg.frequency()?;
        if spec.input_dim() != 1 || spec.output_dim() != 1 {
            return Err(ProblemError::Model(crate::model::ModelError::InvalidSpec(
                "spring network must map 1 -> 1".into(),
            )));
        }
        let data_times = cfg.data_times();
        let data_targets = data_times
            .iter()
            .map(|&t| spring_exact(t, &cfg))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            residual_times: cfg.residual_times(),
            data_times,
            data_targets,
            cfg,
            spec,
            with_constraints: true,
        })
    }

    /// The same objective with the hard constraints dropped.
    pub fn unconstrained(mut self) -> Self {
        self.with_constraints = false;
        self
    }

    /// Standard network 1-32-32-32-1 with the default configuration.
    pub fn standard() -> Self {
        Self::new(
            SpringConfig::default(),
            MlpSpec::new(vec![1, 32, 32, 32, 1]).expect("static spec"),
        )
        .expect("default spring is under-damped")
    }

    pub fn config(&self) -> &SpringConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn has_constraints(&self) -> bool {
        self.with_constraints
    }

    pub fn residual_times(&self) -> &[f64] {
        &self.residual_times
    }

    pub fn data_times(&self) -> &[f64] {
        &self.data_times
    }

    /// `(u, u′, u″)` of the network at `t`.
    pub fn predict_jet(&self, theta: &[f64], t: f64) -> Result<[f64; 3], ProblemError> {
        Ok(self.spec.eval_jet(theta, t)?)
    }

    pub fn predict(&self, theta: &[f64], t: f64) -> Result<f64, ProblemError> {
        Ok(self.spec.forward(theta, &[t])?[0])
    }

    /// ODE residual of the network at `t`.
    pub fn residual_at(&self, theta: &[f64], t: f64) -> Result<f64, ProblemError> {
        let [u, du, ddu] = self.predict_jet(theta, t)?;
        Ok(self.cfg.residual(u, du, ddu))
    }

    /// Mean squared error against the exact solution on `n` evenly spaced
    /// points of `[0, 1]`.
    pub fn test_mse(&self, theta: &[f64], n: usize) -> Result<f64, ProblemError> {
        let ts = linspace((0.0, 1.0), n);
        let mut acc = 0.0;
        for &t in &ts {
            let e = self.predict(theta, t)? - spring_exact(t, &self.cfg)?;
            acc += e * e;
        }
        Ok(acc / n as f64)
    }

    fn residual_node(&self, tape: &mut Tape, j: Jet2) -> Var {
        tape.linear_combination(&[
            (j.d2, self.cfg.mass),
            (j.d1, self.cfg.friction),
            (j.val, self.cfg.stiffness),
        ])
    }

    fn batch_times<'a>(&'a self, batch: &'a Batch) -> Result<Vec<f64>, ProblemError> {
        match batch {
            Batch::Full => Ok(self.residual_times.clone()),
            Batch::Indices(idx) => idx
                .iter()
                .map(|&i| {
                    self.residual_times.get(i).copied().ok_or_else(|| {
                        ProblemError::InvalidBatch(format!("residual index {i} out of range"))
                    })
                })
                .collect(),
        }
    }

    /// Builds the objective on `tape` and returns its node.
    fn objective_on_tape(&self, tape: &mut Tape, params: VarRange, times: &[f64]) -> Var {
        let mut terms = Vec::with_capacity(self.data_times.len() + times.len());
        let wd = 1.0 / self.data_times.len() as f64;
        for (&t, &target) in self.data_times.iter().zip(&self.data_targets) {
            let u = self.spec.forward_on_tape(tape, params, &[t]).get(0);
            let e = tape.custom(tape.value(u) - target, &[(u, 1.0)]);
            terms.push((tape.square(e), wd));
        }
        if !times.is_empty() {
            let wr = self.cfg.residual_weight / times.len() as f64;
            for &t in times {
                let j = self.spec.jet_on_tape(tape, params, t);
                let r = self.residual_node(tape, j);
                terms.push((tape.square(r), wr));
            }
        }
        tape.linear_combination(&terms)
    }

    /// Objective value in plain floating point over the full residual grid.
    fn objective_f64(&self, theta: &[f64]) -> Result<f64, ProblemError> {
        let mut data = 0.0;
        for (&t, &target) in self.data_times.iter().zip(&self.data_targets) {
            let e = self.predict(theta, t)? - target;
            data += e * e;
        }
        let mut res = 0.0;
        for &t in &self.residual_times {
            res += self.residual_at(theta, t)?.powi(2);
        }
        Ok(data / self.data_times.len() as f64
            + self.cfg.residual_weight * res / self.residual_times.len() as f64)
    }
}

impl Problem for SpringProblem {
    fn name(&self) -> &str {
        "spring"
    }

    fn dim(&self) -> usize {
        self.spec.num_params()
    }

    fn num_constraints(&self) -> usize {
        if self.with_constraints {
            self.cfg.constraint_times.len()
        } else {
            0
        }
    }

    fn num_samples(&self) -> usize {
        self.residual_times.len()
    }

    fn initial_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.spec.init_params_with(rng).into_vec()
    }

    fn objective(&self, x: &[f64], batch: &Batch) -> Result<(f64, Vec<f64>), ProblemError> {
        check_dim(self.dim(), x)?;
        let times = self.batch_times(batch)?;
        SCRATCH.with(|cell| {
            let (tape, adj) = &mut *cell.borrow_mut();
            tape.clear();
            let params = tape.leaves_from(x);
            let f = self.objective_on_tape(tape, params, &times);
            let mut g = vec![0.0; x.len()];
            tape.gradient_over(f, params, adj, &mut g);
            Ok((tape.value(f), g))
        })
    }

    fn objective_value(&self, x: &[f64]) -> Result<f64, ProblemError> {
        check_dim(self.dim(), x)?;
        self.objective_f64(x)
    }

    fn constraints(&self, x: &[f64]) -> Result<(Vec<f64>, DenseMatrix), ProblemError> {
        check_dim(self.dim(), x)?;
        let m = self.num_constraints();
        let n = x.len();
        if m == 0 {
            return Ok((vec![], DenseMatrix::zeros(0, n)));
        }
        SCRATCH.with(|cell| {
            let (tape, adj) = &mut *cell.borrow_mut();
            tape.clear();
            let params = tape.leaves_from(x);
            let nodes: Vec<Var> = self
                .cfg
                .constraint_times
                .iter()
                .map(|&t| {
                    let j = self.spec.jet_on_tape(tape, params, t);
                    self.residual_node(tape, j)
                })
                .collect();
            let mut jac = vec![0.0; m * n];
            let mut c = Vec::with_capacity(m);
            for (i, &node) in nodes.iter().enumerate() {
                c.push(tape.value(node));
                tape.gradient_over(node, params, adj, &mut jac[i * n..(i + 1) * n]);
            }
            Ok((c, DenseMatrix::from_row_major(m, n, jac)?))
        })
    }

    fn constraint_values(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        check_dim(self.dim(), x)?;
        if !self.with_constraints {
            return Ok(vec![]);
        }
        self.cfg
            .constraint_times
            .iter()
            .map(|&t| self.residual_at(x, t))
            .collect()
    }
}

impl SpringProblem {
    /// Writes the training data as CSV: `kind,t,target` with kinds `data`,
    /// `residual` and `constraint` (residual targets are zero).
    pub fn write_training_data<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "kind,t,target")?;
        for (&t, &u) in self.data_times.iter().zip(&self.data_targets) {
            writeln!(w, "data,{t},{u}")?;
        }
        for &t in &self.residual_times {
            writeln!(w, "residual,{t},0")?;
        }
        for &t in &self.cfg.constraint_times {
            writeln!(w, "constraint,{t},0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn standard_constants() {
        let cfg = SpringConfig::default();
        assert_eq!(cfg.delta(), 2.0);
        assert_eq!(cfg.w0(), 20.0);
        assert_eq!(cfg.frequency().unwrap(), 396f64.sqrt());
    }

    #[test]
    fn exact_at_zero() {
        let cfg = SpringConfig::default();
        assert_eq!(spring_exact(0.0, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn overdamped_rejected() {
        let cfg = SpringConfig {
            friction: 50.0,
            ..SpringConfig::default()
        };
        assert!(matches!(
            spring_exact(0.1, &cfg),
            Err(ProblemError::Overdamped { .. })
        ));
    }

    #[test]
    fn grids() {
        let cfg = SpringConfig::default();
        let r = cfg.residual_times();
        assert_eq!(r.len(), 30);
        assert_eq!(r[29], 1.0);
        assert!((r[4] - 4.0 / 29.0).abs() < 1e-15);
        let d = cfg.data_times();
        assert_eq!(d.len(), 10);
        assert!((d[9] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn full_batch_is_deterministic_and_matches_f64_path() {
        let p = SpringProblem::new(
            SpringConfig::default(),
            MlpSpec::new(vec![1, 6, 6, 1]).unwrap(),
        )
        .unwrap();
        let x = p.initial_point(&mut ChaCha8Rng::seed_from_u64(2));
        let a = p.objective(&x, &Batch::Full).unwrap();
        let b = p.objective(&x, &Batch::Full).unwrap();
        assert_eq!(a, b);
        let v = p.objective_value(&x).unwrap();
        assert!((a.0 - v).abs() <= 1e-12 * v.abs().max(1.0));
        let (c, _) = p.constraints(&x).unwrap();
        assert_eq!(c.len(), 3);
        for (ci, ti) in c.iter().zip(&p.config().constraint_times) {
            let r = p.residual_at(&x, *ti).unwrap();
            assert!((ci - r).abs() <= 1e-12 * r.abs().max(1.0));
        }
    }

    #[test]
    fn unconstrained_variant_has_no_constraints() {
        let p = SpringProblem::new(
            SpringConfig::default(),
            MlpSpec::new(vec![1, 4, 1]).unwrap(),
        )
        .unwrap()
        .unconstrained();
        let x = vec![0.1; p.dim()];
        let (c, j) = p.constraints(&x).unwrap();
        assert!(c.is_empty());
        assert_eq!((j.rows(), j.cols()), (0, p.dim()));
    }

    #[test]
    fn training_data_csv() {
        let p = SpringProblem::standard();
        let mut buf = Vec::new();
        p.write_training_data(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "kind,t,target");
        assert_eq!(lines.len(), 1 + 10 + 30 + 3);
        assert_eq!(lines[1], "data,0,1");
    }
}
