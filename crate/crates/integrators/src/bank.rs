use serde::{Deserialize, Serialize};

use modal_core::error::{Error, Result};
use modal_core::model::{NormalizedParams, ValidatedSpec};
use modal_core::modes::ModeBasis;

/// Density-normalised damping coefficients `d1/rho` and `d3/rho`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    pub d1_hat: f64,
    pub d3_hat: f64,
}

impl Damping {
    pub fn from_spec(spec: &ValidatedSpec) -> Self {
        let rho = spec.effective_density();
        Self { d1_hat: spec.material.d1 / rho, d3_hat: spec.material.d3 / rho }
    }

    /// `gamma = (d1 + d3 lambda) / (2 rho)`.
    pub fn gamma(&self, lambda: f64) -> f64 {
        0.5 * (self.d1_hat + self.d3_hat * lambda)
    }
}

/// Per-mode angular frequencies and decay rates of the linearised system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorBank {
    pub omega2: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Damped angular frequency; zero for overdamped modes.
    pub omega_tilde: Vec<f64>,
}

impl OscillatorBank {
    /// `omega² = D lambda² + T0 lambda` with damping from `damping`.
    pub fn new(params: &NormalizedParams, damping: Damping, basis: &ModeBasis) -> Self {
        let lam = basis.eigenvalues();
        let omega2 = lam.iter().map(|l| params.d_hat * l * l + params.t0_hat * l).collect();
        let gamma = lam.iter().map(|&l| damping.gamma(l)).collect();
        let bank = Self::assemble(omega2, gamma);
        for mode in bank.overdamped_modes() {
            log::warn!("mode {mode} is overdamped; only the Störmer–Verlet scheme can run it");
        }
        bank
    }

    pub fn from_parts(omega2: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if omega2.len() != gamma.len() {
            return Err(Error::arg("omega2 and gamma must have the same length"));
        }
        if omega2.iter().chain(&gamma).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::arg("omega2 and gamma must be finite and non-negative"));
        }
        Ok(Self::assemble(omega2, gamma))
    }

    fn assemble(omega2: Vec<f64>, gamma: Vec<f64>) -> Self {
        let omega_tilde =
            omega2.iter().zip(&gamma).map(|(w2, g)| if *w2 > g * g { (w2 - g * g).sqrt() } else { 0.0 }).collect();
        Self { omega2, gamma, omega_tilde }
    }

    pub fn len(&self) -> usize {
        self.omega2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega2.is_empty()
    }

    pub fn is_underdamped(&self, mode: usize) -> bool {
        self.omega2[mode] > self.gamma[mode] * self.gamma[mode]
    }

    pub fn overdamped_modes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&m| !self.is_underdamped(m))
    }

    /// Fails with the first overdamped mode.
    pub fn require_underdamped(&self) -> Result<()> {
        match self.overdamped_modes().next() {
            None => Ok(()),
            Some(mode) => {
                Err(Error::Overdamped { mode, gamma: self.gamma[mode], omega: self.omega2[mode].sqrt() })
            }
        }
    }

    /// Damped modal frequencies in Hz.
    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.omega_tilde.iter().map(|w| w / (2.0 * std::f64::consts::PI)).collect()
    }
}

/// Bank for a validated model.
pub fn oscillator_bank(spec: &ValidatedSpec, basis: &ModeBasis) -> OscillatorBank {
    OscillatorBank::new(&modal_core::model::derive_normalized(spec), Damping::from_spec(spec), basis)
}
