//! Multi-start gradient descent over the free parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{FrequencyDomainObjective, Objective, TimeDomainObjective};
use super::optim::{adam_step, one_cycle_lr, AdamConfig, AdamState};
use super::params::{ModalParams, ParamKind, ParamVector, Transform};
use super::LossWeights;
use modal_analysis::StftConfig;
use modal_core::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitRange {
    pub lo: f64,
    pub hi: f64,
}

/// Random-start distributions per parameter group. Positive parameters
/// draw log-uniformly, signed ones uniformly, coupling entries from a
/// zero-mean normal. A missing range keeps the initial value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitRanges {
    pub stiffness_hat: Option<InitRange>,
    pub tension_hat: Option<InitRange>,
    pub tau: Option<InitRange>,
    pub gamma: Option<InitRange>,
    pub b2: Option<InitRange>,
    pub weight: Option<InitRange>,
    /// Standard deviation of coupling entries; defaults to the RMS of the
    /// initial tensor.
    pub coupling_std: Option<f64>,
}

impl InitRanges {
    /// Log-uniform ranges `[x / factor, x factor]` around the positive
    /// scalars and decay rates of `initial`; zero values stay fixed.
    pub fn around(initial: &ModalParams, factor: f64) -> Self {
        let range = |lo: f64, hi: f64| (lo > 0.0 && factor > 1.0).then_some(InitRange { lo: lo / factor, hi: hi * factor });
        let g_lo = initial.gamma.iter().cloned().fold(f64::INFINITY, f64::min);
        let g_hi = initial.gamma.iter().cloned().fold(0.0, f64::max);
        Self {
            stiffness_hat: range(initial.d_hat, initial.d_hat),
            tension_hat: range(initial.t0_hat, initial.t0_hat),
            tau: range(initial.tau, initial.tau),
            gamma: if g_lo.is_finite() { range(g_lo, g_hi) } else { None },
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    OneCycle,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitDomain {
    Time,
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub steps: usize,
    pub peak_lr: f64,
    pub schedule: Schedule,
    pub starts: usize,
    pub seed: u64,
    /// Stop a start once its loss is at or below this value.
    pub tolerance: f64,
    /// Start 0 uses the given initial parameters instead of a random draw.
    pub first_start_from_initial: bool,
    pub init: InitRanges,
    pub loss: LossWeights,
    pub adam: AdamConfig,
    pub domain: FitDomain,
    pub stft: StftConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            peak_lr: 0.05,
            schedule: Schedule::OneCycle,
            starts: 1,
            seed: 0,
            tolerance: 1e-10,
            first_start_from_initial: true,
            init: InitRanges::default(),
            loss: LossWeights::default(),
            adam: AdamConfig::default(),
            domain: FitDomain::Time,
            stft: StftConfig::default(),
        }
    }
}

impl FitConfig {
    /// 1,000 steps from each of 100 random starts.
    pub fn nonlinear_default() -> Self {
        Self { steps: 1000, starts: 100, ..Self::default() }
    }

    /// 15,000 steps from a single start.
    pub fn linear_default() -> Self {
        Self { steps: 15_000, starts: 1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.starts == 0 {
            return Err(Error::arg("fits need at least one step and one start"));
        }
        if !(self.peak_lr.is_finite() && self.peak_lr > 0.0) {
            return Err(Error::arg("peak learning rate must be positive"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::arg("tolerance must be non-negative"));
        }
        self.loss.validate()?;
        let i = &self.init;
        for (name, r) in [
            ("stiffness_hat", i.stiffness_hat),
            ("tension_hat", i.tension_hat),
            ("tau", i.tau),
            ("gamma", i.gamma),
            ("b2", i.b2),
            ("weight", i.weight),
        ] {
            if let Some(r) = r {
                if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                    return Err(Error::arg(format!("init range for {name} must satisfy lo <= hi")));
                }
            }
        }
        if let Some(s) = i.coupling_std {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::arg("coupling_std must be non-negative"));
            }
        }
        Ok(())
    }

    fn lr(&self, step: usize) -> f64 {
        match self.schedule {
            Schedule::OneCycle => one_cycle_lr(step, self.steps, self.peak_lr),
            Schedule::Constant => self.peak_lr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StartStatus {
    /// Ran every step.
    Completed,
    /// Loss reached the tolerance.
    Converged { step: usize },
    /// Evaluation failed or produced a non-finite value.
    Diverged { step: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartResult {
    pub index: usize,
    pub status: StartStatus,
    pub initial: ModalParams,
    pub best: ModalParams,
    pub best_loss: f64,
    pub final_loss: f64,
    /// Loss before each update.
    pub trace: Vec<f64>,
}

impl StartResult {
    /// Running minimum of the trace.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trace.iter().map(|v| {
            best = best.min(*v);
            best
        }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best: ModalParams,
    pub best_loss: f64,
    pub best_start: usize,
    /// Start indices ordered by best loss.
    pub ranking: Vec<usize>,
    pub starts: Vec<StartResult>,
    pub free: ParamVector,
    pub seed: u64,
    pub config: FitConfig,
}

impl FitResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Physical values of the free parameters of the best start.
    pub fn best_values(&self) -> Vec<(ParamKind, f64)> {
        self.free.kinds.iter().map(|k| (*k, self.best.get(*k))).collect()
    }
}

/// Time-domain fit by backpropagation through the simulation.
pub fn fit_time_domain(
    objective: &TimeDomainObjective,
    initial: &ModalParams,
    free: &ParamVector,
    config: &FitConfig,
) -> Result<FitResult> {
    fit(objective, initial, free, config)
}

/// Fit of a linear model's transfer function to a sampled envelope.
pub fn fit_frequency_domain(
    objective: &FrequencyDomainObjective,
    initial: &ModalParams,
    free: &ParamVector,
    config: &FitConfig,
) -> Result<FitResult> {
    fit(objective, initial, free, config)
}

/// Runs `config.starts` independent Adam descents in parallel and ranks
/// them. A start that fails is recorded; the fit fails only when no start
/// produced a finite loss.
pub fn fit(objective: &dyn Objective, initial: &ModalParams, free: &ParamVector, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    initial.check(objective.family())?;
    let starts: Vec<StartResult> = (0..config.starts)
        .into_par_iter()
        .map(|index| {
            let init = if index == 0 && config.first_start_from_initial {
                initial.clone()
            } else {
                random_start(initial, free, config, index)
            };
            run_start(objective, init, free, config, index)
        })
        .collect();
    let mut ranking: Vec<usize> = (0..starts.len()).collect();
    ranking.sort_by(|&a, &b| starts[a].best_loss.total_cmp(&starts[b].best_loss).then(a.cmp(&b)));
    let best_start = ranking[0];
    if !starts[best_start].best_loss.is_finite() {
        let diag: Vec<String> = starts
            .iter()
            .map(|s| match &s.status {
                StartStatus::Diverged { step, reason } => format!("start {}: step {step}: {reason}", s.index),
                other => format!("start {}: {other:?}", s.index),
            })
            .collect();
        return Err(Error::Optimisation(format!("every start diverged ({})", diag.join("; "))));
    }
    Ok(FitResult {
        best: starts[best_start].best.clone(),
        best_loss: starts[best_start].best_loss,
        best_start,
        ranking,
        starts,
        free: free.clone(),
        seed: config.seed,
        config: config.clone(),
    })
}

fn random_start(initial: &ModalParams, free: &ParamVector, config: &FitConfig, index: usize) -> ModalParams {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let mut p = initial.clone();
    let rms = (initial.h.iter().map(|v| v * v).sum::<f64>() / initial.h.len().max(1) as f64).sqrt();
    let i = &config.init;
    for (kind, transform) in free.kinds.iter().zip(&free.transforms) {
        let range = match kind {
            ParamKind::StiffnessHat => i.stiffness_hat,
            ParamKind::TensionHat => i.tension_hat,
            ParamKind::Tau => i.tau,
            ParamKind::Gamma(_) => i.gamma,
            ParamKind::B2(_) => i.b2,
            ParamKind::Weight(_) => i.weight,
            ParamKind::Coupling { .. } => {
                let std = i.coupling_std.unwrap_or(rms);
                if std > 0.0 {
                    let v = Normal::new(0.0, std).map(|d| d.sample(&mut rng)).unwrap_or(0.0);
                    p.set(*kind, v);
                }
                continue;
            }
        };
        let Some(r) = range else { continue };
        let v = match transform {
            Transform::Log | Transform::Softplus { .. } if r.lo > 0.0 => {
                (r.lo.ln() + rng.gen::<f64>() * (r.hi / r.lo).ln()).exp()
            }
            _ => r.lo + rng.gen::<f64>() * (r.hi - r.lo),
        };
        p.set(*kind, v);
    }
    p
}

fn run_start(
    objective: &dyn Objective,
    init: ModalParams,
    free: &ParamVector,
    config: &FitConfig,
    index: usize,
) -> StartResult {
    let mut result = StartResult {
        index,
        status: StartStatus::Completed,
        initial: init.clone(),
        best: init.clone(),
        best_loss: f64::INFINITY,
        final_loss: f64::NAN,
        trace: Vec::with_capacity(config.steps),
    };
    let mut raw = match free.to_raw(&init) {
        Ok(r) => r,
        Err(e) => {
            result.status = StartStatus::Diverged { step: 0, reason: e.to_string() };
            return result;
        }
    };
    let mut adam = AdamState::new(raw.len(), config.adam);
    for step in 0..config.steps {
        let params = free.apply(&raw, &init);
        debug_assert!(params.gamma.iter().all(|g| *g >= 0.0), "decay rates left the stable region");
        let (value, grad) = match objective.loss_and_grad(&params) {
            Ok(v) => v,
            Err(e) => {
                result.status = StartStatus::Diverged { step, reason: e.to_string() };
                break;
            }
        };
        let loss = value.total;
        if !loss.is_finite() {
            result.status = StartStatus::Diverged { step, reason: format!("loss is {loss}") };
            break;
        }
        result.trace.push(loss);
        result.final_loss = loss;
        if loss < result.best_loss {
            result.best_loss = loss;
            result.best = params;
        }
        if loss <= config.tolerance {
            result.status = StartStatus::Converged { step };
            break;
        }
        let g = free.raw_grad(&grad, &raw);
        if g.iter().any(|v| !v.is_finite()) {
            result.status = StartStatus::Diverged { step, reason: "non-finite gradient".into() };
            break;
        }
        adam_step(&mut adam, &mut raw, &g, config.lr(step));
    }
    log::debug!("start {index}: best loss {:.6e} ({:?})", result.best_loss, result.status);
    result
}
