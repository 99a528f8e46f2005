use std::fmt::Write as _;
use std::path::Path;

use modal_core::error::{Error, Result};
use modal_core::modes::PointReadout;

/// Sampled modal amplitudes `q^0 .. q^{N-1}`, plus an optional point readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sample_rate: f64,
    pub modes: usize,
    /// Row-major `[time][mode]`.
    pub modal: Vec<f64>,
    /// The history value `q^{-1}` the run started from.
    pub start_prev: Vec<f64>,
    pub readout: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        if self.modes == 0 {
            0
        } else {
            self.modal.len() / self.modes
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame(&self, n: usize) -> &[f64] {
        &self.modal[n * self.modes..(n + 1) * self.modes]
    }

    pub fn mode_series(&self, mode: usize) -> Vec<f64> {
        self.modal.iter().skip(mode).step_by(self.modes).copied().collect()
    }

    pub fn apply_readout(&mut self, readout: &PointReadout) -> Result<()> {
        if readout.weights.len() != self.modes {
            return Err(Error::arg("readout weights do not match the number of modes"));
        }
        self.readout = Some(self.modal.chunks(self.modes).map(|q| readout.apply(q)).collect());
        Ok(())
    }

    pub fn readout_signal(&self) -> Result<&[f64]> {
        self.readout.as_deref().ok_or_else(|| Error::arg("trajectory has no readout signal"))
    }

    /// `time,q0,q1,...` with one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for m in 0..self.modes {
            let _ = write!(out, ",q{m}");
        }
        out.push('\n');
        for (n, frame) in self.modal.chunks(self.modes.max(1)).enumerate() {
            let _ = write!(out, "{:e}", n as f64 / self.sample_rate);
            for v in frame {
                let _ = write!(out, ",{v:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
