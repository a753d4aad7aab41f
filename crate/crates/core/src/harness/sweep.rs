use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::run::{run_experiment, RunOutput};
use super::HarnessError;

/// Header of the sweep summary CSV.
pub const SUMMARY_HEADER: &str =
    "group,n_ok,n_failed,f_mean,f_std,cviol_mean,cviol_std,proj_grad_sq_mean,proj_grad_sq_std";

/// Final-metric statistics of one group of runs (same config up to seed).
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub group: String,
    pub n_ok: usize,
    pub n_failed: usize,
    /// `(mean, sample std)` of the final `f`, `‖c‖₁` and `‖P∇f‖₂²`; `None`
    /// when every run of the group failed.
    pub f: Option<(f64, f64)>,
    pub cviol: Option<(f64, f64)>,
    pub proj_grad_sq: Option<(f64, f64)>,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64), HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::EmptyGroup);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Summary of one group from its successful runs.
pub fn summarize(group: &str, ok: &[&RunOutput], n_failed: usize) -> Result<SummaryRow, HarnessError> {
    let stat = |f: &dyn Fn(&RunOutput) -> f64| -> Result<Option<(f64, f64)>, HarnessError> {
        if ok.is_empty() {
            return Ok(None);
        }
        mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>()).map(Some)
    };
    if ok.is_empty() && n_failed == 0 {
        return Err(HarnessError::EmptyGroup);
    }
    Ok(SummaryRow {
        group: group.to_string(),
        n_ok: ok.len(),
        n_failed,
        f: stat(&|r| r.final_entry.f)?,
        cviol: stat(&|r| r.final_entry.cviol_l1)?,
        proj_grad_sq: stat(&|r| r.final_entry.proj_grad_sq)?,
    })
}

pub struct SweepOutput {
    pub runs: Vec<(ExperimentConfig, Result<RunOutput, HarnessError>)>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every config (in parallel) and summarizes by group. A failing run
/// is recorded and does not stop the others.
pub fn run_sweep(configs: &[ExperimentConfig]) -> Result<SweepOutput, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::EmptySweep);
    }
    let results: Vec<Result<RunOutput, HarnessError>> =
        configs.par_iter().map(run_experiment).collect();
    let runs: Vec<_> = configs.iter().cloned().zip(results).collect();

    let mut groups: Vec<String> = Vec::new();
    for (cfg, _) in &runs {
        let g = cfg.group_label();
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let summary = groups
        .iter()
        .map(|g| {
            let members: Vec<_> = runs.iter().filter(|(c, _)| &c.group_label() == g).collect();
            let ok: Vec<&RunOutput> = members.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
            summarize(g, &ok, members.len() - ok.len())
        })
        .collect::<Result<_, _>>()?;
    Ok(SweepOutput { runs, summary })
}

/// `base` with seeds `base.seed .. base.seed + n`, each writing
/// `<stem>_seed<s>.csv` next to `base.output` when set.
pub fn seed_configs(base: &ExperimentConfig, n: u64) -> Vec<ExperimentConfig> {
    (0..n)
        .map(|i| {
            let mut c = base.clone();
            c.seed = base.seed + i;
            c.output = base.output.as_ref().map(|p| suffixed(p, &format!("_seed{}", c.seed), "csv"));
            c
        })
        .collect()
}

/// Summary path for a sweep whose base output is `csv`.
pub fn summary_path(csv: &Path) -> PathBuf {
    suffixed(csv, "_summary", "csv")
}

fn suffixed(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

fn fmt_stat(s: Option<(f64, f64)>) -> String {
    match s {
        Some((m, sd)) => format!("{m},{sd}"),
        None => ",".to_string(),
    }
}

pub fn write_summary<W: Write>(mut w: W, rows: &[SummaryRow]) -> std::io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "\"{}\",{},{},{},{},{}",
            r.group.replace('"', "\"\""),
            r.n_ok,
            r.n_failed,
            fmt_stat(r.f),
            fmt_stat(r.cviol),
            fmt_stat(r.proj_grad_sq)
        )?;
    }
    w.flush()
}

pub fn write_summary_file(path: &Path, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_summary(BufWriter::new(f), rows).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{Budget, ProblemId};
    use crate::optimizers::OptimizerKind;

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(m, 3.0);
        assert!((s - 2.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(mean_std(&[]), Err(HarnessError::EmptyGroup)));
        assert!(matches!(summarize("g", &[], 0), Err(HarnessError::EmptyGroup)));
    }

    #[test]
    fn five_seeds_one_group() {
        let mut base = ExperimentConfig::new(
            ProblemId::Circle,
            OptimizerKind::SqpHeavyball,
            Budget::Iterations(50),
        );
        base.noise_sigma = 0.1;
        base.hyper.alpha = 0.01;
        let out = run_sweep(&seed_configs(&base, 5)).unwrap();
        assert_eq!(out.summary.len(), 1);
        let row = &out.summary[0];
        assert_eq!((row.n_ok, row.n_failed), (5, 0));
        let finals: Vec<f64> = out
            .runs
            .iter()
            .map(|(_, r)| r.as_ref().unwrap().final_entry.cviol_l1)
            .collect();
        assert_eq!(row.cviol, Some(mean_std(&finals).unwrap()));
        assert!(row.cviol.unwrap().1 > 0.0);
        assert!(matches!(run_sweep(&[]), Err(HarnessError::EmptySweep)));
    }

    #[test]
    fn seed_paths() {
        let mut base = ExperimentConfig::new(
            ProblemId::Circle,
            OptimizerKind::SqpAdam,
            Budget::Iterations(1),
        );
        base.seed = 3;
        base.output = Some("out/circle.csv".into());
        let cfgs = seed_configs(&base, 2);
        assert_eq!(cfgs[1].seed, 4);
        assert_eq!(cfgs[1].output.as_deref(), Some(Path::new("out/circle_seed4.csv")));
        assert_eq!(
            summary_path(Path::new("out/circle.csv")),
            Path::new("out/circle_summary.csv")
        );
    }
}
