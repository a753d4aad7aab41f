use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::ConfigError;
use crate::model::MlpSpec;
use crate::optimizers::{CommonHyper, OptimizerKind, Schedule};
use crate::problems::{CircleProblem, LinearProblem, Problem, SpringConfig, SpringProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemId {
    Circle,
    Linear,
    Spring,
}

impl ProblemId {
    pub fn id(self) -> &'static str {
        match self {
            ProblemId::Circle => "circle",
            ProblemId::Linear => "linear",
            ProblemId::Spring => "spring",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ProblemId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "circle" => Ok(ProblemId::Circle),
            "linear" => Ok(ProblemId::Linear),
            "spring" => Ok(ProblemId::Spring),
            _ => Err(format!("unknown problem `{s}` (circle, linear, spring)")),
        }
    }
}

/// Iteration budget, either in optimizer steps or in passes over the
/// sampled objective terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Iterations(u64),
    Epochs(u64),
}

/// One experiment: problem, stepper, hyperparameters, sampling and output.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub optimizer: OptimizerKind,
    pub budget: Budget,
    pub hyper: CommonHyper,
    pub batch_fraction: f64,
    pub seed: u64,
    /// Record every `stride`-th iteration (plus the last one).
    pub stride: u64,
    /// Trajectory CSV; the parameter and optimizer checkpoints are written
    /// next to it with `.params` and `.state` extensions.
    pub output: Option<PathBuf>,
    /// Additive gradient noise for the analytic problems.
    pub noise_sigma: f64,
    /// Merit parameter; estimated from the trajectory when absent.
    pub tau: Option<f64>,
    /// Fill the `wall_s` column (makes CSVs run-dependent).
    pub timing: bool,
    /// Network widths for the spring problem.
    pub widths: Vec<usize>,
}

/// Keys accepted in config files and `--set` overrides.
pub const CONFIG_KEYS: &[&str] = &[
    "problem",
    "optimizer",
    "iterations",
    "epochs",
    "alpha",
    "beta",
    "beta1",
    "beta2",
    "eps",
    "rho",
    "h",
    "jitter",
    "batch_fraction",
    "seed",
    "stride",
    "output",
    "noise_sigma",
    "tau",
    "timing",
    "widths",
];

impl ExperimentConfig {
    /// Defaults for everything but problem, optimizer and budget.
    pub fn new(problem: ProblemId, optimizer: OptimizerKind, budget: Budget) -> Self {
        Self {
            problem,
            optimizer,
            budget,
            hyper: CommonHyper::default(),
            batch_fraction: 1.0,
            seed: 0,
            stride: 1,
            output: None,
            noise_sigma: 0.0,
            tau: None,
            timing: false,
            widths: vec![1, 32, 32, 32, 1],
        }
    }

    /// Parses `key = value` lines (`#` starts a comment) and applies
    /// `overrides` on top.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected key = value, got `{line}`"),
            })?;
            let k = k.trim().to_string();
            if map.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: format!("duplicate key `{k}`"),
                });
            }
        }
        for (k, v) in overrides {
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_map(&map)
    }

    pub fn from_file(path: &Path, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text, overrides)
    }

    fn from_map(map: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        for k in map.keys() {
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(ConfigError::invalid(k, "unknown key"));
            }
        }
        let required = |k: &'static str| {
            map.get(k)
                .ok_or_else(|| ConfigError::invalid(k, "missing required key"))
        };
        let problem = parse_field("problem", required("problem")?)?;
        let optimizer = OptimizerKind::from_str(required("optimizer")?)
            .map_err(|e| ConfigError::invalid("optimizer", e.to_string()))?;
        let budget = match (map.get("iterations"), map.get("epochs")) {
            (Some(v), None) => Budget::Iterations(parse_field("iterations", v)?),
            (None, Some(v)) => Budget::Epochs(parse_field("epochs", v)?),
            (Some(_), Some(_)) => {
                return Err(ConfigError::invalid(
                    "epochs",
                    "set either iterations or epochs, not both",
                ))
            }
            (None, None) => {
                return Err(ConfigError::invalid(
                    "iterations",
                    "missing budget (iterations or epochs)",
                ))
            }
        };
        let mut cfg = Self::new(problem, optimizer, budget);
        let h = &mut cfg.hyper;
        let get = |k: &str| map.get(k).map(String::as_str);
        macro_rules! set {
            ($key:literal, $target:expr) => {
                if let Some(v) = get($key) {
                    $target = parse_field($key, v)?;
                }
            };
        }
        set!("alpha", h.alpha);
        set!("beta", h.beta);
        set!("beta1", h.beta1);
        set!("beta2", h.beta2);
        set!("eps", h.eps);
        set!("jitter", h.jitter);
        if let Some(v) = get("rho") {
            h.rho = Schedule::from_str(v).map_err(|e| ConfigError::invalid("rho", e))?;
        }
        if let Some(v) = get("h") {
            h.h = Schedule::from_str(v).map_err(|e| ConfigError::invalid("h", e))?;
        }
        set!("batch_fraction", cfg.batch_fraction);
        set!("seed", cfg.seed);
        set!("stride", cfg.stride);
        set!("noise_sigma", cfg.noise_sigma);
        set!("timing", cfg.timing);
        if let Some(v) = get("output") {
            cfg.output = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        if let Some(v) = get("tau") {
            cfg.tau = match v {
                "auto" => None,
                _ => Some(parse_field("tau", v)?),
            };
        }
        if let Some(v) = get("widths") {
            cfg.widths = v
                .split(',')
                .map(|w| parse_field("widths", w.trim()))
                .collect::<Result<_, _>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        use crate::optimizers::OptimError;
        self.hyper.validate().map_err(|e| match e {
            OptimError::InvalidHyper { field, msg } => ConfigError::invalid(field, msg),
            other => ConfigError::invalid("hyper", other.to_string()),
        })?;
        match self.budget {
            Budget::Iterations(0) => return Err(ConfigError::invalid("iterations", "must be >= 1")),
            Budget::Epochs(0) => return Err(ConfigError::invalid("epochs", "must be >= 1")),
            _ => {}
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(ConfigError::invalid(
                "batch_fraction",
                format!("{} outside (0, 1]", self.batch_fraction),
            ));
        }
        if self.stride == 0 {
            return Err(ConfigError::invalid("stride", "must be >= 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(ConfigError::invalid("noise_sigma", "must be finite and >= 0"));
        }
        if self.problem == ProblemId::Spring && self.noise_sigma != 0.0 {
            return Err(ConfigError::invalid(
                "noise_sigma",
                "the spring problem is stochastic through its mini-batches only",
            ));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::invalid("tau", "must be positive"));
            }
        }
        if self.problem == ProblemId::Spring {
            MlpSpec::new(self.widths.clone())
                .map_err(|e| ConfigError::invalid("widths", e.to_string()))?;
            if self.widths.first() != Some(&1) || self.widths.last() != Some(&1) {
                return Err(ConfigError::invalid("widths", "spring network must be 1 -> ... -> 1"));
            }
        }
        Ok(())
    }

    /// Instantiates the problem.
    pub fn build_problem(&self) -> Result<Box<dyn Problem>, ConfigError> {
        Ok(match self.problem {
            ProblemId::Circle => Box::new(CircleProblem::new(self.noise_sigma)),
            ProblemId::Linear => Box::new(LinearProblem::new(self.noise_sigma)),
            ProblemId::Spring => Box::new(self.build_spring()?),
        })
    }

    pub fn build_spring(&self) -> Result<SpringProblem, ConfigError> {
        let spec = MlpSpec::new(self.widths.clone())
            .map_err(|e| ConfigError::invalid("widths", e.to_string()))?;
        SpringProblem::new(SpringConfig::default(), spec)
            .map_err(|e| ConfigError::invalid("widths", e.to_string()))
    }

    /// Canonical `key=value` lines. Every field is written, so parsing the
    /// result reproduces `self`.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        let h = &self.hyper;
        let mut kv = vec![
            ("problem", self.problem.to_string()),
            ("optimizer", self.optimizer.to_string()),
        ];
        match self.budget {
            Budget::Iterations(n) => kv.push(("iterations", n.to_string())),
            Budget::Epochs(n) => kv.push(("epochs", n.to_string())),
        }
        kv.extend([
            ("alpha", h.alpha.to_string()),
            ("beta", h.beta.to_string()),
            ("beta1", h.beta1.to_string()),
            ("beta2", h.beta2.to_string()),
            ("eps", h.eps.to_string()),
            ("rho", h.rho.to_string()),
            ("h", h.h.to_string()),
            ("jitter", h.jitter.to_string()),
            ("batch_fraction", self.batch_fraction.to_string()),
            ("seed", self.seed.to_string()),
            ("stride", self.stride.to_string()),
            (
                "output",
                self.output
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("noise_sigma", self.noise_sigma.to_string()),
            (
                "tau",
                self.tau.map_or_else(|| "auto".to_string(), |t| t.to_string()),
            ),
            ("timing", self.timing.to_string()),
            (
                "widths",
                self.widths
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
        ]);
        kv
    }

    /// Label identifying runs that differ only in seed and output path.
    pub fn group_label(&self) -> String {
        self.to_key_values()
            .into_iter()
            .filter(|(k, _)| !matches!(*k, "seed" | "output"))
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn parse_field<T: FromStr>(field: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse()
        .map_err(|e: T::Err| ConfigError::invalid(field, format!("`{v}`: {e}")))
}
