use serde::{Deserialize, Serialize};

use super::bank::OscillatorBank;
use super::hook::NonlinearHook;
use modal_core::error::{Error, Result};

/// Explicit time-stepping schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Impulse-invariant transfer-function discretisation.
    Ftm,
    /// Störmer–Verlet (centred differences, centred damping).
    Sv,
}

/// Coefficients of the FTM two-pole resonators
/// `H(z) = (b1 z + b2) / (z² + a1 z + a2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtmCoeffs {
    pub period: f64,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvCoeffs {
    pub period: f64,
    pub g: Vec<f64>,
    pub p: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SchemeCoeffs {
    Ftm(FtmCoeffs),
    Sv(SvCoeffs),
}

impl SchemeCoeffs {
    pub fn new(kind: SchemeKind, bank: &OscillatorBank, period: f64) -> Result<Self> {
        match kind {
            SchemeKind::Ftm => ftm_coeffs(bank, period, None).map(SchemeCoeffs::Ftm),
            SchemeKind::Sv => sv_coeffs(bank, period).map(SchemeCoeffs::Sv),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            SchemeCoeffs::Ftm(_) => SchemeKind::Ftm,
            SchemeCoeffs::Sv(_) => SchemeKind::Sv,
        }
    }

    pub fn period(&self) -> f64 {
        match self {
            SchemeCoeffs::Ftm(c) => c.period,
            SchemeCoeffs::Sv(c) => c.period,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SchemeCoeffs::Ftm(c) => c.a1.len(),
            SchemeCoeffs::Sv(c) => c.g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The common two-step form of both schemes.
    pub fn recurrence(&self) -> Recurrence {
        match self {
            SchemeCoeffs::Ftm(c) => Recurrence {
                period: c.period,
                c1: c.a1.iter().map(|a| -a).collect(),
                c2: c.a2.iter().map(|a| -a).collect(),
                in1: c.b1.clone(),
                in2: c.b2.clone(),
            },
            SchemeCoeffs::Sv(c) => Recurrence {
                period: c.period,
                c1: c.g.clone(),
                c2: c.p.clone(),
                in1: c.r.clone(),
                in2: vec![0.0; c.r.len()],
            },
        }
    }
}

/// `q^{n+1} = c1 q^n + c2 q^{n-1} + in1 u^n + in2 u^{n-1}` with the input
/// `u = f_ext - f_nl`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recurrence {
    pub period: f64,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub in1: Vec<f64>,
    pub in2: Vec<f64>,
}

impl Recurrence {
    pub fn len(&self) -> usize {
        self.c1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c1.is_empty()
    }
}

/// Impulse-invariant coefficients. `b2` defaults to zero.
pub fn ftm_coeffs(bank: &OscillatorBank, period: f64, b2: Option<&[f64]>) -> Result<FtmCoeffs> {
    check_period(period)?;
    bank.require_underdamped()?;
    let n = bank.len();
    if let Some(b2) = b2 {
        if b2.len() != n {
            return Err(Error::arg(format!("expected {n} b2 coefficients, got {}", b2.len())));
        }
    }
    let mut c = FtmCoeffs {
        period,
        a1: Vec::with_capacity(n),
        a2: Vec::with_capacity(n),
        b1: Vec::with_capacity(n),
        b2: b2.map_or_else(|| vec![0.0; n], <[f64]>::to_vec),
    };
    for (gamma, wt) in bank.gamma.iter().zip(&bank.omega_tilde) {
        let decay = (-gamma * period).exp();
        let (s, co) = (wt * period).sin_cos();
        c.a1.push(-2.0 * decay * co);
        c.a2.push(decay * decay);
        c.b1.push(period * decay * s / wt);
    }
    Ok(c)
}

pub fn sv_coeffs(bank: &OscillatorBank, period: f64) -> Result<SvCoeffs> {
    check_period(period)?;
    let n = bank.len();
    let mut c = SvCoeffs { period, g: Vec::with_capacity(n), p: Vec::with_capacity(n), r: Vec::with_capacity(n) };
    for (mode, (w2, gamma)) in bank.omega2.iter().zip(&bank.gamma).enumerate() {
        if w2.sqrt() * period >= 2.0 {
            log::warn!(
                "mode {mode}: omega T = {:.3} >= 2, Störmer–Verlet is unstable for this mode without damping",
                w2.sqrt() * period
            );
        }
        let den = 1.0 + gamma * period;
        c.r.push(period * period / den);
        c.g.push((2.0 - w2 * period * period) / den);
        c.p.push((gamma * period - 1.0) / den);
    }
    Ok(c)
}

fn check_period(period: f64) -> Result<()> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("sample period must be positive, got {period}")))
    }
}

/// Amplitudes at the current and previous step.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub q_curr: Vec<f64>,
    pub q_prev: Vec<f64>,
    /// Input `f_ext - f_nl` of the previous step (feeds `b2`).
    pub input_prev: Vec<f64>,
    /// Index of `q_curr`.
    pub n: usize,
}

impl SimState {
    pub fn at_rest(modes: usize) -> Self {
        Self { q_curr: vec![0.0; modes], q_prev: vec![0.0; modes], input_prev: vec![0.0; modes], n: 0 }
    }

    /// State at `n = 0` from modal displacement and velocity. The previous
    /// step comes from a second-order Taylor expansion of the unforced
    /// modal equation backwards in time.
    pub fn from_initial(q0: &[f64], v0: &[f64], bank: &OscillatorBank, period: f64, hook: &NonlinearHook) -> Self {
        let q_prev = start_history(q0, v0, bank, period, hook);
        Self { q_curr: q0.to_vec(), q_prev, input_prev: vec![0.0; q0.len()], n: 0 }
    }
}

/// `q^{-1} = q0 - T v0 + T²/2 (-2 gamma v0 - omega² q0 - f_nl(q0))`.
pub fn start_history(q0: &[f64], v0: &[f64], bank: &OscillatorBank, period: f64, hook: &NonlinearHook) -> Vec<f64> {
    let nl = hook.force(q0);
    let half = 0.5 * period * period;
    (0..q0.len())
        .map(|m| {
            let acc = -2.0 * bank.gamma[m] * v0[m] - bank.omega2[m] * q0[m] - nl[m];
            q0[m] - period * v0[m] + half * acc
        })
        .collect()
}

/// Advances states with a fixed recurrence and nonlinear hook.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    pub recurrence: Recurrence,
    pub hook: &'a NonlinearHook,
    nl: Vec<f64>,
    scratch: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(coeffs: &SchemeCoeffs, hook: &'a NonlinearHook) -> Self {
        Self::from_recurrence(coeffs.recurrence(), hook)
    }

    pub fn from_recurrence(recurrence: Recurrence, hook: &'a NonlinearHook) -> Self {
        let n = recurrence.len();
        Self { recurrence, hook, nl: vec![0.0; n], scratch: vec![0.0; hook.scratch_len()], next: vec![0.0; n] }
    }

    /// One explicit update with modal external force `f_ext` at the current
    /// step.
    pub fn step(&mut self, state: &mut SimState, f_ext: &[f64]) -> Result<()> {
        let m = self.recurrence.len();
        if state.q_curr.len() != m || f_ext.len() != m {
            return Err(Error::arg(format!("state and force must have {m} modes")));
        }
        self.hook.apply(&state.q_curr, &mut self.scratch, &mut self.nl);
        let r = &self.recurrence;
        for k in 0..m {
            let input = f_ext[k] - self.nl[k];
            self.next[k] =
                r.c1[k] * state.q_curr[k] + r.c2[k] * state.q_prev[k] + r.in1[k] * input + r.in2[k] * state.input_prev[k];
            state.input_prev[k] = input;
        }
        std::mem::swap(&mut state.q_prev, &mut state.q_curr);
        std::mem::swap(&mut state.q_curr, &mut self.next);
        state.n += 1;
        if let Some(mode) = state.q_curr.iter().position(|v| !v.is_finite()) {
            return Err(Error::Instability { step: state.n, mode, value: state.q_curr[mode] });
        }
        Ok(())
    }
}
