use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use modal_core::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    /// Periodic Hann.
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn samples(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
                .collect(),
            WindowKind::Rectangular => vec![1.0; len],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Rectangular => "rectangular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub window: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { window_len: 1024, hop: 256, window: WindowKind::Hann }
    }
}

/// Magnitude frames `[frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub sample_rate: f64,
    pub config: StftConfig,
    pub frames: usize,
    pub bins: usize,
    pub bin_freqs: Vec<f64>,
    pub mags: Vec<f64>,
}

impl Spectrogram {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.mags[i * self.bins..(i + 1) * self.bins]
    }

    pub fn same_shape(&self, other: &Spectrogram) -> bool {
        self.frames == other.frames && self.bins == other.bins
    }

    /// One header line (`rate,window,length,hop`) followed by one row of
    /// magnitudes per frame.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "rate={},window={},length={},hop={}\n",
            self.sample_rate,
            self.config.window.name(),
            self.config.window_len,
            self.config.hop
        );
        for i in 0..self.frames {
            let row: Vec<String> = self.frame(i).iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Complex frames kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ComplexFrames {
    pub signal_len: usize,
    pub data: Vec<Complex64>,
}

/// Reusable STFT with centred frames and reflect padding.
#[derive(Clone)]
pub struct StftPlan {
    pub config: StftConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftPlan").field("config", &self.config).finish()
    }
}

impl StftPlan {
    pub fn new(config: StftConfig) -> Result<Self> {
        if config.window_len < 2 || config.hop == 0 || config.hop > config.window_len {
            return Err(Error::arg(format!(
                "STFT needs window length >= hop > 0, got window {} and hop {}",
                config.window_len, config.hop
            )));
        }
        let fft = FftPlanner::new().plan_fft_forward(config.window_len);
        Ok(Self { config, window: config.window.samples(config.window_len), fft })
    }

    pub fn bins(&self) -> usize {
        self.config.window_len / 2 + 1
    }

    pub fn frame_count(&self, signal_len: usize) -> usize {
        1 + signal_len / self.config.hop
    }

    fn pad(&self) -> usize {
        self.config.window_len / 2
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len < self.config.window_len {
            return Err(Error::arg(format!(
                "signal of {len} samples is shorter than the {}-sample window",
                self.config.window_len
            )));
        }
        Ok(())
    }

    /// Padded index to signal index (reflection without repeating the edge).
    fn source_index(&self, p: usize, len: usize) -> usize {
        let pad = self.pad();
        if p < pad {
            pad - p
        } else if p < pad + len {
            p - pad
        } else {
            2 * len - 2 - (p - pad)
        }
    }

    pub fn forward(&self, signal: &[f64], sample_rate: f64) -> Result<(Spectrogram, ComplexFrames)> {
        self.check_len(signal.len())?;
        let (n, bins, frames) = (self.config.window_len, self.bins(), self.frame_count(signal.len()));
        let data: Vec<Complex64> = (0..frames)
            .into_par_iter()
            .flat_map_iter(|f| {
                let start = f * self.config.hop;
                let mut buf: Vec<Complex64> = (0..n)
                    .map(|k| Complex64::new(self.window[k] * signal[self.source_index(start + k, signal.len())], 0.0))
                    .collect();
                self.fft.process(&mut buf);
                buf.truncate(bins);
                buf
            })
            .collect();
        let spec = Spectrogram {
            sample_rate,
            config: self.config,
            frames,
            bins,
            bin_freqs: (0..bins).map(|k| k as f64 * sample_rate / n as f64).collect(),
            mags: data.iter().map(|c| c.norm()).collect(),
        };
        Ok((spec, ComplexFrames { signal_len: signal.len(), data }))
    }

    pub fn magnitude(&self, signal: &[f64], sample_rate: f64) -> Result<Spectrogram> {
        Ok(self.forward(signal, sample_rate)?.0)
    }

    /// Gradient with respect to the signal given the gradient with respect
    /// to the magnitudes. Bins with zero magnitude contribute nothing.
    pub fn backward(&self, frames: &ComplexFrames, grad_mags: &[f64]) -> Vec<f64> {
        let (n, bins, len) = (self.config.window_len, self.bins(), frames.signal_len);
        let count = frames.data.len() / bins;
        let per_frame: Vec<Vec<f64>> = (0..count)
            .into_par_iter()
            .map(|f| {
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for k in 0..bins {
                    let x = frames.data[f * bins + k];
                    let g = grad_mags[f * bins + k];
                    let mag = x.norm();
                    if mag > 0.0 && g != 0.0 {
                        buf[k] = x.conj() * (g / mag);
                    }
                }
                // sum_k c_k e^{-2 pi i k n / N} is a forward transform
                self.fft.process(&mut buf);
                buf.iter().zip(&self.window).map(|(c, w)| c.re * w).collect()
            })
            .collect();
        let mut grad = vec![0.0; len];
        for (f, g) in per_frame.iter().enumerate() {
            let start = f * self.config.hop;
            for (k, v) in g.iter().enumerate() {
                grad[self.source_index(start + k, len)] += v;
            }
        }
        grad
    }
}

/// Magnitude STFT.
pub fn stft(signal: &[f64], sample_rate: f64, config: StftConfig) -> Result<Spectrogram> {
    StftPlan::new(config)?.magnitude(signal, sample_rate)
}
