use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{Budget, ExperimentConfig, ProblemId};
use super::HarnessError;
use crate::linalg::{norm2, norm_inf, smallest_singular_value, DenseMatrix};
use crate::metrics::{
    exact_eval, stationarity_of, tau_from_constants, RunningAverage, StationarityEntry,
    TauConstants,
};
use crate::model::{write_flat, write_params, MlpSpec};
use crate::optimizers::Optimizer;
use crate::problems::{BatchSampler, Problem, ProblemEval};
use crate::rng::{stream, Stream};

/// Exact CSV header of a trajectory file.
pub const CSV_HEADER: &str = "k,f,cviol_l1,proj_grad_sq,merit,dnorm,eta,wall_s";

/// One trajectory row: exact metrics at the iterate `x_k` the `k`-th step
/// starts from, and that step's direction norm and bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub k: u64,
    pub f: f64,
    pub cviol_l1: f64,
    pub proj_grad_sq: f64,
    pub merit: f64,
    pub dnorm: f64,
    pub eta: Option<f64>,
    pub wall_s: f64,
}

impl TrajectoryRecord {
    fn csv_line(&self) -> String {
        let eta = self.eta.map(|e| e.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.k, self.f, self.cviol_l1, self.proj_grad_sq, self.merit, self.dnorm, eta, self.wall_s
        )
    }
}

pub fn write_csv<W: Write>(mut w: W, records: &[TrajectoryRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_line())?;
    }
    w.flush()
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<TrajectoryRecord>,
    /// Iterations performed.
    pub iterations: u64,
    /// Passes over the sampled objective terms.
    pub epochs: f64,
    /// `x_{K+1}`.
    pub final_x: Vec<f64>,
    /// Exact metrics at `x_{K+1}`.
    pub final_entry: StationarityEntry,
    /// Mean of `h_max⁻¹ ‖P∇f‖₂² + ρ_min ‖c‖₁` over the recorded rows.
    pub running_avg: f64,
    /// Merit parameter used for the `merit` column.
    pub tau: f64,
    /// Constants `τ` was derived from, when it was estimated.
    pub constants: Option<TauConstants>,
    /// `max_k ‖J_k d_k + ρ_k c_k‖∞ / (1 + ‖c_k‖∞)` over all iterations of a
    /// constrained stepper; zero otherwise.
    pub max_feasibility_ratio: f64,
    pub optimizer: Optimizer,
}

impl RunOutput {
    /// Per-row terms `h_max⁻¹ ‖P∇f‖₂² + ρ_min ‖c‖₁`.
    pub fn stationarity_terms(&self, cfg: &ExperimentConfig) -> Vec<f64> {
        let avg = RunningAverage::new(cfg.hyper.h.max(), cfg.hyper.rho.min());
        self.records
            .iter()
            .map(|r| avg.term(r.proj_grad_sq, r.cviol_l1))
            .collect()
    }

    /// Mean of the stationarity terms over the last `fraction` of the rows.
    pub fn tail_mean(&self, cfg: &ExperimentConfig, fraction: f64) -> f64 {
        let terms = self.stationarity_terms(cfg);
        let n = ((terms.len() as f64 * fraction).ceil() as usize).clamp(1, terms.len());
        terms[terms.len() - n..].iter().sum::<f64>() / n as f64
    }
}

/// Paths of the files a run with trajectory CSV `csv` writes.
pub fn artifact_paths(csv: &Path) -> (PathBuf, PathBuf) {
    (csv.with_extension("params"), csv.with_extension("state"))
}

fn sigma_of(jac: &DenseMatrix) -> Result<f64, HarnessError> {
    if jac.rows() == 0 {
        return Ok(f64::INFINITY);
    }
    smallest_singular_value(jac).map_err(|e| HarnessError::numerical(0, e))
}

/// Runs one experiment. Writes the CSV and checkpoints when
/// `cfg.output` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let out = run_on(cfg, problem.as_ref())?;
    if let Some(path) = &cfg.output {
        write_outputs(cfg, path, &out)?;
    }
    Ok(out)
}

fn write_outputs(cfg: &ExperimentConfig, path: &Path, out: &RunOutput) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(BufWriter::new(file), &out.records).map_err(|e| HarnessError::io(path, e))?;
    let (params, state) = artifact_paths(path);
    let file = BufWriter::new(File::create(&params).map_err(|e| HarnessError::io(&params, e))?);
    match cfg.problem {
        ProblemId::Spring => {
            let spec = MlpSpec::new(cfg.widths.clone())
                .map_err(|e| HarnessError::io(&params, std::io::Error::other(e)))?;
            write_params(file, &spec, &out.final_x)
                .map_err(|e| HarnessError::io(&params, std::io::Error::other(e)))?;
        }
        _ => write_flat(file, &[out.final_x.len() as u32], &out.final_x)
            .map_err(|e| HarnessError::io(&params, e))?,
    }
    let file = BufWriter::new(File::create(&state).map_err(|e| HarnessError::io(&state, e))?);
    out.optimizer
        .write_state(file)
        .map_err(|e| HarnessError::io(&state, std::io::Error::other(e)))?;
    Ok(())
}

/// Runs `cfg` on an already constructed problem. No files are written.
pub fn run_on(cfg: &ExperimentConfig, problem: &dyn Problem) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let hyper = &cfg.hyper;
    let n = problem.dim();
    let mut x = problem.initial_point(&mut stream(cfg.seed, Stream::Init));
    let mut sampler = BatchSampler::new(
        problem.num_samples(),
        cfg.batch_fraction,
        stream(cfg.seed, Stream::Batch),
    )
    .map_err(|e| super::ConfigError::invalid("batch_fraction", e.to_string()))?;
    let mut noise = stream(cfg.seed, Stream::Noise);
    let iterations = match cfg.budget {
        Budget::Iterations(k) => k,
        Budget::Epochs(e) => e * sampler.batches_per_epoch() as u64,
    };
    let constrained = cfg.optimizer.is_constrained();
    let mut opt = Optimizer::new(cfg.optimizer, n);
    let start = Instant::now();

    let mut records = Vec::new();
    let mut entries = Vec::new();
    let (mut sigma_min, mut kappa): (f64, f64) = (f64::INFINITY, 0.0);
    let mut max_ratio: f64 = 0.0;
    let mut observe = |x: &[f64], k: u64| -> Result<StationarityEntry, HarnessError> {
        let e = exact_eval(problem, x).map_err(|e| HarnessError::numerical(k, e))?;
        sigma_min = sigma_min.min(sigma_of(&e.jac).map_err(|err| err.at(k))?);
        kappa = kappa.max(norm2(&e.g));
        stationarity_of(&e, hyper.jitter).map_err(|err| HarnessError::numerical(k, err))
    };

    for k in 1..=iterations {
        let batch = sampler.next_batch();
        let eval = if constrained {
            problem.evaluate(&x, &batch, &mut noise)
        } else {
            problem
                .stochastic_objective(&x, &batch, &mut noise)
                .map(|(f_est, g)| ProblemEval {
                    f_est,
                    g,
                    c: vec![],
                    jac: DenseMatrix::zeros(0, n),
                })
        }
        .map_err(|e| HarnessError::numerical(k, e))?;
        let step = opt.step(&eval, hyper).map_err(|e| HarnessError::numerical(k, e))?;

        if constrained && eval.jac.rows() > 0 {
            let jd = eval.jac.matvec(&step.d).map_err(|e| HarnessError::numerical(k, e))?;
            let resid: Vec<f64> = jd.iter().zip(&eval.c).map(|(a, c)| a + step.rho * c).collect();
            max_ratio = max_ratio.max(norm_inf(&resid) / (1.0 + norm_inf(&eval.c)));
        }

        if (k - 1) % cfg.stride == 0 || k == iterations {
            let entry = observe(&x, k)?;
            records.push(TrajectoryRecord {
                k,
                f: entry.f,
                cviol_l1: entry.cviol_l1,
                proj_grad_sq: entry.proj_grad_sq,
                merit: f64::NAN,
                dnorm: norm2(&step.d),
                eta: step.eta,
                wall_s: if cfg.timing {
                    start.elapsed().as_secs_f64()
                } else {
                    0.0
                },
            });
            entries.push(entry);
        }

        for (xi, di) in x.iter_mut().zip(&step.d) {
            *xi += hyper.alpha * di;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(HarnessError::Diverged { iteration: k });
        }
    }
    let final_entry = observe(&x, iterations + 1)?;

    let (tau, constants) = match cfg.tau {
        Some(t) => (t, None),
        None => {
            let k = TauConstants::new(sigma_min, hyper.rho.min(), hyper.rho.max(), kappa)
                .map_err(|e| HarnessError::numerical(iterations, e))?;
            (tau_from_constants(&k), Some(k))
        }
    };
    let mut avg = RunningAverage::new(hyper.h.max(), hyper.rho.min());
    for (r, e) in records.iter_mut().zip(&entries) {
        r.merit = e.merit(tau);
        avg.push(e.proj_grad_sq, e.cviol_l1);
    }
    Ok(RunOutput {
        records,
        iterations,
        epochs: iterations as f64 / sampler.batches_per_epoch() as f64,
        final_x: x,
        final_entry,
        running_avg: avg.value(),
        tau,
        constants,
        max_feasibility_ratio: max_ratio,
        optimizer: opt,
    })
}
