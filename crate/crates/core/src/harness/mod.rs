//! Experiment harness: configs, single runs with trajectory logging, seed
//! sweeps and the built-in oracle checks.

use std::error::Error;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod check;
pub mod config;
pub mod run;
pub mod sweep;

pub use check::{run_checks, CheckResult};
pub use config::{Budget, ExperimentConfig, ProblemId, CONFIG_KEYS};
pub use run::{artifact_paths, run_experiment, run_on, write_csv, RunOutput, TrajectoryRecord, CSV_HEADER};
pub use sweep::{
    mean_std, run_sweep, seed_configs, summarize, summary_path, write_summary, write_summary_file,
    SummaryRow, SweepOutput, SUMMARY_HEADER,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config field `{field}`: {msg}")]
    Invalid { field: String, msg: String },
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, msg: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure at iteration {iteration}: {source}")]
    Numerical {
        iteration: u64,
        #[source]
        source: Box<dyn Error + Send + Sync>,
    },
    #[error("iterate diverged at iteration {iteration}")]
    Diverged { iteration: u64 },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("sweep has no configurations")]
    EmptySweep,
    #[error("group has no runs")]
    EmptyGroup,
}

impl HarnessError {
    pub fn numerical(iteration: u64, source: impl Error + Send + Sync + 'static) -> Self {
        HarnessError::Numerical {
            iteration,
            source: Box::new(source),
        }
    }

    /// Re-tags a numerical failure with the iteration it happened at.
    pub fn at(self, iteration: u64) -> Self {
        match self {
            HarnessError::Numerical { source, .. } => HarnessError::Numerical { iteration, source },
            HarnessError::Diverged { .. } => HarnessError::Diverged { iteration },
            other => other,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 1 for bad input or i/o, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Numerical { .. } | HarnessError::Diverged { .. } => 2,
            _ => 1,
        }
    }
}
