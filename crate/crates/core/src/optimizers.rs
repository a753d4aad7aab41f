//! Step rules for the projected stochastic SQP methods and their baselines.
//!
//! Every constrained stepper splits its direction as `d = v + t` where
//! `v = −ρ_k Jᵀ(JJᵀ)⁻¹c` is the normal step and `t` lies in `null(J)`, so
//! `J d = −ρ_k c` holds at every iteration regardless of the gradient noise.
//! The steppers differ only in how they build `t`:
//!
//! | stepper        | momentum input        | tangential part                      |
//! |----------------|-----------------------|--------------------------------------|
//! | `sqp`          | none                  | `−h⁻¹ P g`                           |
//! | `sqp-heavyball`| `u = −h⁻¹ P g`        | `P r`, `r ← βr + u`                  |
//! | `sqp-adam`     | `u = −h⁻¹ P g`        | `η_k P diag(s + εe)^{−1/2} r`        |
//! | `adam-con`     | `u = −h⁻¹ g`          | `η_k P diag(s + εe)^{−1/2} r`        |
//! | `adam-unc`     | `u = −h⁻¹ g`, `m = 0` | `η_k diag(s + εe)^{−1/2} r`          |
//!
//! The caller applies `x ← x + α d`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::{LinalgError, NullSpace};
use crate::model::{read_flat, write_flat, ModelError};
use crate::problems::ProblemEval;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("invalid hyperparameter `{field}`: {msg}")]
    InvalidHyper { field: &'static str, msg: String },
    #[error("state has dimension {found}, problem has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown optimizer `{0}`")]
    UnknownOptimizer(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Format(#[from] ModelError),
}

/// Per-iteration scalar sequence (`ρ_k` or `h_k`), indexed from `k = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// `(first_k, value)` pairs with strictly increasing `first_k`, the first
    /// being 1. The value at `k` is the one of the last pair with
    /// `first_k ≤ k`.
    Piecewise(Vec<(u64, f64)>),
}

impl Schedule {
    pub fn at(&self, k: u64) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Piecewise(pts) => pts
                .iter()
                .take_while(|(from, _)| *from <= k)
                .last()
                .map_or(pts[0].1, |p| p.1),
        }
    }

    pub fn min(&self) -> f64 {
        self.values().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            Schedule::Constant(v) => Box::new(std::iter::once(*v)),
            Schedule::Piecewise(pts) => Box::new(pts.iter().map(|p| p.1)),
        }
    }

    fn check(&self) -> Result<(), String> {
        if let Schedule::Piecewise(pts) = self {
            if pts.first().map(|p| p.0) != Some(1) {
                return Err("piecewise schedule must start at k = 1".into());
            }
            if pts.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err("breakpoints must be strictly increasing".into());
            }
        }
        Ok(())
    }
}

impl FromStr for Schedule {
    type Err = String;

    /// `0.5` for a constant, or `1:1.0,500:0.5` for piecewise values.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if !s.contains(':') {
            return s
                .parse()
                .map(Schedule::Constant)
                .map_err(|e| format!("`{s}`: {e}"));
        }
        let pts = s
            .split(',')
            .map(|part| {
                let (k, v) = part
                    .split_once(':')
                    .ok_or_else(|| format!("`{part}` is not k:value"))?;
                let k = k.trim().parse().map_err(|e| format!("`{k}`: {e}"))?;
                let v = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
                Ok((k, v))
            })
            .collect::<Result<Vec<_>, String>>()?;
        let sched = Schedule::Piecewise(pts);
        sched.check()?;
        Ok(sched)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(v) => write!(f, "{v}"),
            Schedule::Piecewise(pts) => {
                let parts: Vec<String> = pts.iter().map(|(k, v)| format!("{k}:{v}")).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Hyperparameters shared by all steppers.
#[derive(Clone, Debug, PartialEq)]
pub struct CommonHyper {
    pub alpha: f64,
    pub beta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub rho: Schedule,
    pub h: Schedule,
    /// Factor `JJᵀ + δI` instead of failing on a rank-deficient Jacobian.
    pub jitter: bool,
}

impl Default for CommonHyper {
    fn default() -> Self {
        Self {
            alpha: 5e-4,
            beta: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-7,
            rho: Schedule::Constant(1.0),
            h: Schedule::Constant(1.0),
            jitter: false,
        }
    }
}

impl CommonHyper {
    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |field, msg: String| Err(OptimError::InvalidHyper { field, msg });
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha", format!("{} outside (0, 1]", self.alpha));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad("beta", format!("{} outside [0, 1)", self.beta));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad("beta1", format!("{} outside [0, 1)", self.beta1));
        }
        if !(self.beta2 > self.beta1 && self.beta2 < 1.0) {
            return bad(
                "beta2",
                format!("{} outside (beta1, 1) = ({}, 1)", self.beta2, self.beta1),
            );
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps", format!("{} is not positive", self.eps));
        }
        if let Err(msg) = self.rho.check() {
            return bad("rho", msg);
        }
        if !(self.rho.min() > 0.0 && self.rho.max() <= 1.0) {
            return bad("rho", format!("values of `{}` outside (0, 1]", self.rho));
        }
        if let Err(msg) = self.h.check() {
            return bad("h", msg);
        }
        if !(self.h.min() > 0.0 && self.h.max().is_finite()) {
            return bad("h", format!("values of `{}` must be positive", self.h));
        }
        Ok(())
    }
}

/// `η_k = (1−β₁)√(1−β₂ᵏ)/√(1−β₂)` for `k ≥ 1`.
pub fn bias_correction(k: u64, beta1: f64, beta2: f64) -> f64 {
    assert!(k >= 1, "bias correction is defined for k >= 1");
    // 1 − β₂ᵏ without cancellation for β₂ near 1.
    let one_minus_pow = -(k as f64 * beta2.ln()).exp_m1();
    (1.0 - beta1) * one_minus_pow.sqrt() / (1.0 - beta2).sqrt()
}

/// Output of one stepper call.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    /// Search direction `d_k`.
    pub d: Vec<f64>,
    /// Normal component `v_k` (zero for unconstrained steps).
    pub v: Vec<f64>,
    /// `η_k` for the Adam steppers.
    pub eta: Option<f64>,
    /// `ρ_k` used for the normal step.
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeavyBallState {
    pub r: Vec<f64>,
    /// Completed iterations.
    pub k: u64,
}

impl HeavyBallState {
    pub fn new(n: usize) -> Self {
        Self { r: vec![0.0; n], k: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    /// Completed iterations.
    pub k: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            r: vec![0.0; n],
            s: vec![0.0; n],
            k: 0,
        }
    }
}

fn check_state(n: usize, eval: &ProblemEval) -> Result<(), OptimError> {
    if eval.g.len() != n || eval.jac.cols() != n {
        return Err(OptimError::DimensionMismatch {
            expected: eval.g.len(),
            found: n,
        });
    }
    Ok(())
}

fn null_space<'a>(eval: &'a ProblemEval, hyper: &CommonHyper) -> Result<NullSpace<'a>, OptimError> {
    Ok(NullSpace::build(&eval.jac, hyper.jitter)?)
}

fn scaled(v: &[f64], k: f64) -> Vec<f64> {
    v.iter().map(|x| k * x).collect()
}

/// Deterministic SQP with `H = I`: `d = v − h_k⁻¹ P g`. With `ρ = h = 1`
/// this is the `s` block of the KKT system.
pub fn sqp_step(k: u64, eval: &ProblemEval, hyper: &CommonHyper) -> Result<Step, OptimError> {
    let ns = null_space(eval, hyper)?;
    let rho = hyper.rho.at(k);
    let v = ns.normal_step(&eval.c, rho)?;
    let t = ns.project(&eval.g)?;
    let inv_h = 1.0 / hyper.h.at(k);
    let d = v.iter().zip(&t).map(|(vi, ti)| vi - inv_h * ti).collect();
    Ok(Step {
        d,
        v,
        eta: None,
        rho,
    })
}

/// Projected heavy-ball SQP step. Returns the direction and the advanced
/// state.
pub fn heavyball_step(
    state: HeavyBallState,
    eval: &ProblemEval,
    hyper: &CommonHyper,
) -> Result<(Step, HeavyBallState), OptimError> {
    check_state(state.r.len(), eval)?;
    let k = state.k + 1;
    let ns = null_space(eval, hyper)?;
    let rho = hyper.rho.at(k);
    let v = ns.normal_step(&eval.c, rho)?;
    let u = scaled(&ns.project(&eval.g)?, -1.0 / hyper.h.at(k));
    let r: Vec<f64> = state
        .r
        .iter()
        .zip(&u)
        .map(|(ri, ui)| hyper.beta * ri + ui)
        .collect();
    let pr = ns.project(&r)?;
    let d = v.iter().zip(&pr).map(|(a, b)| a + b).collect();
    Ok((
        Step {
            d,
            v,
            eta: None,
            rho,
        },
        HeavyBallState { r, k },
    ))
}

fn adam_core(
    state: AdamState,
    u: Vec<f64>,
    ns: Option<&NullSpace<'_>>,
    v: Vec<f64>,
    rho: f64,
    hyper: &CommonHyper,
) -> Result<(Step, AdamState), OptimError> {
    let k = state.k + 1;
    let mut r = state.r;
    let mut s = state.s;
    for ((ri, si), ui) in r.iter_mut().zip(s.iter_mut()).zip(&u) {
        *ri = hyper.beta1 * *ri + ui;
        *si = hyper.beta2 * *si + ui * ui;
    }
    let eta = bias_correction(k, hyper.beta1, hyper.beta2);
    let w: Vec<f64> = r
        .iter()
        .zip(&s)
        .map(|(ri, si)| ri / (si + hyper.eps).sqrt())
        .collect();
    let t = match ns {
        Some(ns) => ns.project(&w)?,
        None => w,
    };
    let d = v.iter().zip(&t).map(|(vi, ti)| vi + eta * ti).collect();
    Ok((
        Step {
            d,
            v,
            eta: Some(eta),
            rho,
        },
        AdamState { r, s, k },
    ))
}

/// Projected Adam SQP step: momentum and second moment are accumulated from
/// the projected, scaled gradient `u = −h_k⁻¹ P g`.
pub fn adam_sqp_step(
    state: AdamState,
    eval: &ProblemEval,
    hyper: &CommonHyper,
) -> Result<(Step, AdamState), OptimError> {
    check_state(state.r.len(), eval)?;
    let k = state.k + 1;
    let ns = null_space(eval, hyper)?;
    let rho = hyper.rho.at(k);
    let v = ns.normal_step(&eval.c, rho)?;
    let u = scaled(&ns.project(&eval.g)?, -1.0 / hyper.h.at(k));
    adam_core(state, u, Some(&ns), v, rho, hyper)
}

/// Constrained Adam without projection inside the moments: `u = −h_k⁻¹ g`,
/// final scaled momentum still projected onto `null(J)`.
pub fn adam_con_step(
    state: AdamState,
    eval: &ProblemEval,
    hyper: &CommonHyper,
) -> Result<(Step, AdamState), OptimError> {
    check_state(state.r.len(), eval)?;
    let k = state.k + 1;
    let ns = null_space(eval, hyper)?;
    let rho = hyper.rho.at(k);
    let v = ns.normal_step(&eval.c, rho)?;
    let u = scaled(&eval.g, -1.0 / hyper.h.at(k));
    adam_core(state, u, Some(&ns), v, rho, hyper)
}

/// Plain Adam on the objective alone (constraints ignored).
pub fn adam_unc_step(
    state: AdamState,
    g: &[f64],
    hyper: &CommonHyper,
) -> Result<(Step, AdamState), OptimError> {
    if g.len() != state.r.len() {
        return Err(OptimError::DimensionMismatch {
            expected: g.len(),
            found: state.r.len(),
        });
    }
    let k = state.k + 1;
    let u = scaled(g, -1.0 / hyper.h.at(k));
    let v = vec![0.0; g.len()];
    adam_core(state, u, None, v, 0.0, hyper)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    /// Deterministic-form SQP with `H = I`, no momentum.
    Sqp,
    SqpHeavyball,
    SqpAdam,
    AdamCon,
    AdamUnc,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::Sqp,
        OptimizerKind::SqpHeavyball,
        OptimizerKind::SqpAdam,
        OptimizerKind::AdamCon,
        OptimizerKind::AdamUnc,
    ];

    pub fn id(self) -> &'static str {
        match self {
            OptimizerKind::Sqp => "sqp",
            OptimizerKind::SqpHeavyball => "sqp-heavyball",
            OptimizerKind::SqpAdam => "sqp-adam",
            OptimizerKind::AdamCon => "adam-con",
            OptimizerKind::AdamUnc => "adam-unc",
        }
    }

    /// Whether the stepper uses the constraints at all.
    pub fn is_constrained(self) -> bool {
        self != OptimizerKind::AdamUnc
    }

    pub fn is_adam(self) -> bool {
        matches!(
            self,
            OptimizerKind::SqpAdam | OptimizerKind::AdamCon | OptimizerKind::AdamUnc
        )
    }

    fn code(self) -> u32 {
        match self {
            OptimizerKind::Sqp => 0,
            OptimizerKind::SqpHeavyball => 1,
            OptimizerKind::SqpAdam => 2,
            OptimizerKind::AdamCon => 3,
            OptimizerKind::AdamUnc => 4,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for OptimizerKind {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, OptimError> {
        Self::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| OptimError::UnknownOptimizer(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum StateKind {
    Stateless { n: usize, k: u64 },
    HeavyBall(HeavyBallState),
    Adam(AdamState),
}

/// A stepper together with its running state.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    state: StateKind,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, n: usize) -> Self {
        let state = match kind {
            OptimizerKind::Sqp => StateKind::Stateless { n, k: 0 },
            OptimizerKind::SqpHeavyball => StateKind::HeavyBall(HeavyBallState::new(n)),
            _ => StateKind::Adam(AdamState::new(n)),
        };
        Self { kind, state }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Completed iterations.
    pub fn iterations(&self) -> u64 {
        match &self.state {
            StateKind::Stateless { k, .. } => *k,
            StateKind::HeavyBall(s) => s.k,
            StateKind::Adam(s) => s.k,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.state {
            StateKind::Stateless { n, .. } => *n,
            StateKind::HeavyBall(s) => s.r.len(),
            StateKind::Adam(s) => s.r.len(),
        }
    }

    pub fn heavyball_state(&self) -> Option<&HeavyBallState> {
        match &self.state {
            StateKind::HeavyBall(s) => Some(s),
            _ => None,
        }
    }

    pub fn adam_state(&self) -> Option<&AdamState> {
        match &self.state {
            StateKind::Adam(s) => Some(s),
            _ => None,
        }
    }

    /// Advances the state by one iteration. For `adam-unc` only `eval.g` is
    /// read.
    pub fn step(&mut self, eval: &ProblemEval, hyper: &CommonHyper) -> Result<Step, OptimError> {
        let placeholder = StateKind::Stateless { n: 0, k: 0 };
        let state = std::mem::replace(&mut self.state, placeholder);
        let (step, state) = match (self.kind, state) {
            (OptimizerKind::Sqp, StateKind::Stateless { n, k }) => {
                let restore = StateKind::Stateless { n, k };
                if eval.g.len() != n {
                    self.state = restore;
                    return Err(OptimError::DimensionMismatch {
                        expected: eval.g.len(),
                        found: n,
                    });
                }
                match sqp_step(k + 1, eval, hyper) {
                    Ok(step) => (step, StateKind::Stateless { n, k: k + 1 }),
                    Err(e) => {
                        self.state = restore;
                        return Err(e);
                    }
                }
            }
            (OptimizerKind::SqpHeavyball, StateKind::HeavyBall(s)) => {
                let backup = s.clone();
                match heavyball_step(s, eval, hyper) {
                    Ok((step, s)) => (step, StateKind::HeavyBall(s)),
                    Err(e) => {
                        self.state = StateKind::HeavyBall(backup);
                        return Err(e);
                    }
                }
            }
            (kind, StateKind::Adam(s)) => {
                let backup = s.clone();
                let out = match kind {
                    OptimizerKind::SqpAdam => adam_sqp_step(s, eval, hyper),
                    OptimizerKind::AdamCon => adam_con_step(s, eval, hyper),
                    _ => adam_unc_step(s, &eval.g, hyper),
                };
                match out {
                    Ok((step, s)) => (step, StateKind::Adam(s)),
                    Err(e) => {
                        self.state = StateKind::Adam(backup);
                        return Err(e);
                    }
                }
            }
            _ => unreachable!("optimizer kind and state always agree"),
        };
        self.state = state;
        Ok(step)
    }

    /// Binary state checkpoint in the parameter-file convention: header
    /// `[kind, n, k_low, k_high]`, payload `r` then `s` (whichever exist).
    pub fn write_state<W: Write>(&self, w: W) -> Result<(), OptimError> {
        let k = self.iterations();
        let header = [
            self.kind.code(),
            self.dim() as u32,
            k as u32,
            (k >> 32) as u32,
        ];
        let payload: Vec<f64> = match &self.state {
            StateKind::Stateless { .. } => vec![],
            StateKind::HeavyBall(s) => s.r.clone(),
            StateKind::Adam(s) => s.r.iter().chain(&s.s).copied().collect(),
        };
        write_flat(w, &header, &payload).map_err(ModelError::from)?;
        Ok(())
    }

    pub fn read_state<R: Read>(r: R) -> Result<Self, OptimError> {
        let (header, payload) = read_flat(r)?;
        let bad = |msg: &str| OptimError::Format(ModelError::Format(msg.to_string()));
        let [code, n, lo, hi] = header[..] else {
            return Err(bad("optimizer header must have 4 words"));
        };
        let kind = OptimizerKind::from_code(code).ok_or_else(|| bad("unknown optimizer code"))?;
        let (n, k) = (n as usize, (u64::from(hi) << 32) | u64::from(lo));
        let state = match kind {
            OptimizerKind::Sqp if payload.is_empty() => StateKind::Stateless { n, k },
            OptimizerKind::SqpHeavyball if payload.len() == n => {
                StateKind::HeavyBall(HeavyBallState { r: payload, k })
            }
            OptimizerKind::SqpAdam | OptimizerKind::AdamCon | OptimizerKind::AdamUnc
                if payload.len() == 2 * n =>
            {
                let (r, s) = payload.split_at(n);
                StateKind::Adam(AdamState {
                    r: r.to_vec(),
                    s: s.to_vec(),
                    k,
                })
            }
            _ => return Err(bad("payload length does not match optimizer state")),
        };
        Ok(Self { kind, state })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn eval(g: Vec<f64>, c: Vec<f64>, rows: &[Vec<f64>]) -> ProblemEval {
        let jac = if rows.is_empty() {
            DenseMatrix::zeros(0, g.len())
        } else {
            DenseMatrix::from_rows(rows).unwrap()
        };
        ProblemEval {
            f_est: 0.0,
            g,
            c,
            jac,
        }
    }

    #[test]
    fn bias_correction_values() {
        assert!((bias_correction(1, 0.9, 0.999) - 0.1).abs() < 1e-15);
        assert!((bias_correction(1, 0.5, 0.7) - 0.5).abs() < 1e-15);
        let limit = 0.1 / 0.001f64.sqrt();
        assert!((bias_correction(1_000_000, 0.9, 0.999) - limit).abs() < 1e-12);
        assert!((limit - 3.16228).abs() < 1e-5);
        assert!(bias_correction(2, 0.9, 0.999) > bias_correction(1, 0.9, 0.999));
    }

    #[test]
    fn stationary_feasible_point_gives_zero_direction() {
        let e = eval(vec![0.0, 0.0], vec![0.0], &[vec![1.0, 0.0]]);
        let hyper = CommonHyper::default();
        let state = HeavyBallState {
            r: vec![0.0, 2.0],
            k: 3,
        };
        let (step, next) = heavyball_step(HeavyBallState::new(2), &e, &hyper).unwrap();
        assert_eq!(step.d, vec![0.0, 0.0]);
        assert_eq!(next.k, 1);
        let (_, next) = heavyball_step(state, &e, &hyper).unwrap();
        assert_eq!(next.r, vec![0.0, 0.9 * 2.0]);
    }

    #[test]
    fn adam_unc_first_step_closed_form() {
        let hyper = CommonHyper::default();
        let (step, state) = adam_unc_step(AdamState::new(1), &[1.0], &hyper).unwrap();
        let expected = -(1.0 - hyper.beta1) / (1.0 + hyper.eps).sqrt();
        assert!((step.d[0] - expected).abs() < 1e-15);
        assert_eq!(state.s, vec![1.0]);
    }

    #[test]
    fn adam_unc_equals_adam_sqp_without_constraints() {
        let hyper = CommonHyper::default();
        let e = eval(vec![0.3, -1.2, 4.0], vec![], &[]);
        let (a, sa) = adam_unc_step(AdamState::new(3), &e.g, &hyper).unwrap();
        let (b, sb) = adam_sqp_step(AdamState::new(3), &e, &hyper).unwrap();
        assert_eq!(a.d, b.d);
        assert_eq!(sa, sb);
    }

    #[test]
    fn hyper_validation() {
        assert!(CommonHyper::default().validate().is_ok());
        let bad = CommonHyper {
            beta2: 0.9,
            ..CommonHyper::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(OptimError::InvalidHyper { field: "beta2", .. })
        ));
        let bad = CommonHyper {
            rho: Schedule::Constant(1.5),
            ..CommonHyper::default()
        };
        assert!(bad.validate().is_err());
        let bad = CommonHyper {
            alpha: 0.0,
            ..CommonHyper::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn schedules() {
        let s: Schedule = "1:1.0,10:0.5,20:0.25".parse().unwrap();
        assert_eq!(s.at(1), 1.0);
        assert_eq!(s.at(9), 1.0);
        assert_eq!(s.at(10), 0.5);
        assert_eq!(s.at(1000), 0.25);
        assert_eq!((s.min(), s.max()), (0.25, 1.0));
        assert_eq!(s.to_string(), "1:1,10:0.5,20:0.25");
        assert!("2:1.0".parse::<Schedule>().is_err());
        assert!("1:1.0,1:2.0".parse::<Schedule>().is_err());
        assert_eq!("0.5".parse::<Schedule>().unwrap(), Schedule::Constant(0.5));
    }

    #[test]
    fn state_round_trip() {
        let hyper = CommonHyper::default();
        let e = eval(vec![1.0, 2.0, 3.0], vec![0.5], &[vec![1.0, 1.0, 0.0]]);
        for kind in OptimizerKind::ALL {
            let mut opt = Optimizer::new(kind, 3);
            opt.step(&e, &hyper).unwrap();
            opt.step(&e, &hyper).unwrap();
            let mut buf = Vec::new();
            opt.write_state(&mut buf).unwrap();
            let back = Optimizer::read_state(&buf[..]).unwrap();
            assert_eq!(back, opt);
            assert_eq!(back.iterations(), 2);
        }
        assert!(Optimizer::read_state(&[1u8, 0, 0, 0, 9, 0, 0, 0][..]).is_err());
    }

    #[test]
    fn failed_step_keeps_state() {
        let hyper = CommonHyper::default();
        let good = eval(vec![1.0, 2.0, 3.0], vec![0.5], &[vec![1.0, 1.0, 0.0]]);
        let singular = eval(
            vec![1.0, 2.0, 3.0],
            vec![0.5, 1.0],
            &[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]],
        );
        let mut opt = Optimizer::new(OptimizerKind::SqpAdam, 3);
        opt.step(&good, &hyper).unwrap();
        let before = opt.clone();
        assert!(matches!(
            opt.step(&singular, &hyper),
            Err(OptimError::Linalg(LinalgError::NotPositiveDefinite { .. }))
        ));
        assert_eq!(opt, before);
    }

    #[test]
    fn ids_round_trip() {
        for kind in OptimizerKind::ALL {
            assert_eq!(kind.id().parse::<OptimizerKind>().unwrap(), kind);
        }
        assert!("sgd".parse::<OptimizerKind>().is_err());
    }
}
