use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use modal_core::error::{Error, Result};
use modal_core::modes::{Domain, ModeBasis, Point};

/// Raised-cosine force pulse `A/2 (1 - cos(2 pi (t - onset) / duration))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaisedCosine {
    pub amplitude: f64,
    #[serde(default)]
    pub onset: f64,
    pub duration: f64,
}

impl RaisedCosine {
    pub fn at(&self, t: f64) -> f64 {
        let s = t - self.onset;
        if s < 0.0 || s > self.duration {
            0.0
        } else {
            0.5 * self.amplitude * (1.0 - (2.0 * PI * s / self.duration).cos())
        }
    }

    /// Samples covering the pulse at `rate`.
    pub fn sample(&self, rate: f64) -> Vec<f64> {
        let n = ((self.onset + self.duration) * rate).ceil() as usize + 1;
        (0..n).map(|k| self.at(k as f64 / rate)).collect()
    }
}

/// Triangular (string) or pyramidal (rectangle) pluck shape peaked at
/// `location`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pluck {
    pub location: Point,
    pub amplitude: f64,
}

impl Pluck {
    /// Modal amplitudes of the pluck shape. On rectangles the shape is the
    /// product of two unit triangles.
    pub fn modal(&self, basis: &ModeBasis) -> Result<Vec<f64>> {
        let tri = |m: usize, pos: f64, len: f64| -> Result<f64> {
            let rel = pos / len;
            if !(rel > 0.0 && rel < 1.0) {
                return Err(Error::arg(format!("pluck position {pos} must lie strictly inside (0, {len})")));
            }
            let mp = m as f64 * PI;
            Ok(2.0 * (mp * rel).sin() / (mp * mp * rel * (1.0 - rel)))
        };
        (0..basis.len())
            .map(|i| {
                let label = basis.labels()[i];
                let sine_coeff = match basis.domain() {
                    Domain::Line { length } => tri(label.0, self.location.x, length)?,
                    Domain::Rect { lx, ly } => tri(label.0, self.location.x, lx)? * tri(label.1, self.location.y, ly)?,
                };
                // the shape is sum c_mu sin(...) = sum c_mu sqrt(raw norm) Phi_mu
                let scale = if basis.is_unit_normalised() { basis.raw_norm_sq(i).sqrt() } else { 1.0 };
                Ok(self.amplitude * sine_coeff * scale)
            })
            .collect()
    }
}

/// Time signal for a point force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForceSignal {
    Samples { values: Vec<f64> },
    RaisedCosine(RaisedCosine),
}

impl ForceSignal {
    pub fn samples(&self, rate: f64) -> Vec<f64> {
        match self {
            ForceSignal::Samples { values } => values.clone(),
            ForceSignal::RaisedCosine(p) => p.sample(rate),
        }
    }
}

/// How a simulation is driven.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Excitation {
    /// Modal displacement and velocity at `t = 0`.
    InitialCondition { q0: Vec<f64>, v0: Vec<f64> },
    /// Initial displacement from a pluck shape, at rest.
    Pluck(Pluck),
    /// Point force in newtons.
    PointForce { location: Point, signal: ForceSignal },
}

/// Excitation resolved to modal coordinates: initial conditions and a
/// separable force `f_mu^n = shape_mu * signal^n` (density-normalised).
#[derive(Debug, Clone, PartialEq)]
pub struct ModalDrive {
    pub q0: Vec<f64>,
    pub v0: Vec<f64>,
    pub shape: Vec<f64>,
    pub signal: Vec<f64>,
}

impl ModalDrive {
    pub fn free(q0: Vec<f64>, v0: Vec<f64>) -> Result<Self> {
        if q0.len() != v0.len() {
            return Err(Error::arg("q0 and v0 must have the same length"));
        }
        if q0.iter().chain(&v0).any(|v| !v.is_finite()) {
            return Err(Error::arg("initial conditions must be finite"));
        }
        let n = q0.len();
        Ok(Self { q0, v0, shape: vec![0.0; n], signal: Vec::new() })
    }

    pub fn forced(shape: Vec<f64>, signal: Vec<f64>) -> Result<Self> {
        if signal.iter().chain(&shape).any(|v| !v.is_finite()) {
            return Err(Error::arg("force signal must be finite"));
        }
        let n = shape.len();
        Ok(Self { q0: vec![0.0; n], v0: vec![0.0; n], shape, signal })
    }

    /// Unit impulse at `n = 0` on every mode.
    pub fn impulse(modes: usize) -> Self {
        Self { q0: vec![0.0; modes], v0: vec![0.0; modes], shape: vec![1.0; modes], signal: vec![1.0] }
    }

    pub fn resolve(excitation: &Excitation, basis: &ModeBasis, rho_eff: f64, rate: f64) -> Result<Self> {
        let n = basis.len();
        match excitation {
            Excitation::InitialCondition { q0, v0 } => {
                if q0.len() != n || v0.len() != n {
                    return Err(Error::arg(format!("initial conditions need {n} modal values")));
                }
                Self::free(q0.clone(), v0.clone())
            }
            Excitation::Pluck(p) => Self::free(p.modal(basis)?, vec![0.0; n]),
            Excitation::PointForce { location, signal } => {
                let shape = basis.project_point_excitation(*location)?.into_iter().map(|g| g / rho_eff).collect();
                Self::forced(shape, signal.samples(rate))
            }
        }
    }

    pub fn modes(&self) -> usize {
        self.q0.len()
    }

    pub fn is_at_rest(&self) -> bool {
        self.q0.iter().chain(&self.v0).all(|v| *v == 0.0)
    }

    /// Modal force at step `n` into `out`.
    pub fn force_at(&self, n: usize, out: &mut [f64]) {
        let s = self.signal.get(n).copied().unwrap_or(0.0);
        for (o, g) in out.iter_mut().zip(&self.shape) {
            *o = g * s;
        }
    }
}
