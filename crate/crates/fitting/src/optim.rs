use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Updates taken so far.
    pub t: u32,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self { config, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grad: &[f64], lr: f64) {
    let AdamConfig { beta1, beta2, epsilon } = state.config;
    state.t += 1;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    for k in 0..params.len() {
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * grad[k];
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * grad[k] * grad[k];
        let m_hat = state.m[k] / c1;
        let v_hat = state.v[k] / c2;
        params[k] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}

/// Fraction of the run spent warming up.
pub const WARMUP_FRACTION: f64 = 0.1;
const START_DIV: f64 = 25.0;
const FINAL_DIV: f64 = 100.0;

/// One-cycle schedule: linear rise from `peak/25` to `peak` over the first
/// 10% of `total`, then cosine decay to `peak/100` at `total`.
pub fn one_cycle_lr(step: usize, total: usize, peak: f64) -> f64 {
    let total = total.max(1) as f64;
    let s = (step as f64).min(total);
    let apex = WARMUP_FRACTION * total;
    if s < apex {
        let lo = peak / START_DIV;
        lo + (peak - lo) * s / apex
    } else {
        let lo = peak / FINAL_DIV;
        let frac = if total > apex { (s - apex) / (total - apex) } else { 1.0 };
        lo + 0.5 * (peak - lo) * (1.0 + (PI * frac).cos())
    }
}
