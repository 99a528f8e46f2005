use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use modal_core::error::{Error, Result};

/// Default order for envelope extraction.
pub const DEFAULT_LPC_ORDER: usize = 64;

/// All-pole model `gain / A(z)` with `A(z) = 1 + sum_k a_k z^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpcModel {
    pub coeffs: Vec<f64>,
    pub reflection: Vec<f64>,
    pub gain: f64,
}

impl LpcModel {
    /// Flat envelope of the given gain (order zero).
    pub fn flat(gain: f64) -> Self {
        Self { coeffs: Vec::new(), reflection: Vec::new(), gain }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Impulse response of the synthesis filter `gain / A(z)`.
    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        let mut y = vec![0.0; len];
        for n in 0..len {
            let mut v = if n == 0 { self.gain } else { 0.0 };
            for (k, a) in self.coeffs.iter().enumerate() {
                if n > k {
                    v -= a * y[n - k - 1];
                }
            }
            y[n] = v;
        }
        y
    }
}

/// Biased autocorrelation `r_k = sum_n x_n x_{n+k}` for `k = 0..=order`.
pub fn autocorrelation(signal: &[f64], order: usize) -> Vec<f64> {
    (0..=order).map(|k| signal.iter().zip(&signal[k.min(signal.len())..]).map(|(a, b)| a * b).sum()).collect()
}

/// Autocorrelation method with the Levinson–Durbin recursion. The gain is
/// the RMS of the prediction residual.
pub fn lpc(signal: &[f64], order: usize) -> Result<LpcModel> {
    if order >= signal.len() {
        return Err(Error::arg(format!("LPC order {order} must be below the signal length {}", signal.len())));
    }
    let r = autocorrelation(signal, order);
    if !(r[0] > 0.0) {
        return Err(Error::arg("singular autocorrelation: the signal is identically zero"));
    }
    let (coeffs, reflection, err) = levinson_durbin(&r, order);
    Ok(LpcModel { coeffs, reflection, gain: (err.max(0.0) / signal.len() as f64).sqrt() })
}

/// Solves the Toeplitz normal equations. Returns predictor coefficients,
/// reflection coefficients and the final prediction error.
pub fn levinson_durbin(r: &[f64], order: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let mut a = vec![0.0; order];
    let mut refl = Vec::with_capacity(order);
    let mut err = r[0];
    for i in 0..order {
        let mut acc = r[i + 1];
        for j in 0..i {
            acc += a[j] * r[i - j];
        }
        let k = if err > 0.0 { -acc / err } else { 0.0 };
        let prev = a[..i].to_vec();
        for j in 0..i {
            a[j] = prev[j] + k * prev[i - 1 - j];
        }
        a[i] = k;
        refl.push(k);
        err *= 1.0 - k * k;
    }
    (a, refl, err)
}

/// Coefficients of `A(z)` from reflection coefficients (step-up recursion).
pub fn reflection_to_coeffs(reflection: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::new();
    for &k in reflection {
        let prev = a.clone();
        a.push(k);
        for j in 0..prev.len() {
            a[j] = prev[j] + k * prev[prev.len() - 1 - j];
        }
    }
    a
}

/// Probe frequencies must be finite and strictly inside `(0, Nyquist)`.
pub fn check_freqs(freqs: &[f64], sample_rate: f64) -> Result<()> {
    let nyquist = 0.5 * sample_rate;
    match freqs.iter().find(|f| !(**f >= 0.0 && **f <= nyquist)) {
        Some(f) => Err(Error::arg(format!("frequency {f} Hz outside [0, {nyquist}] Hz"))),
        None => Ok(()),
    }
}

/// `gain / |A(e^{i w T})|` at each frequency.
pub fn lpc_envelope_at(model: &LpcModel, freqs: &[f64], sample_rate: f64) -> Result<Vec<f64>> {
    check_freqs(freqs, sample_rate)?;
    Ok(freqs
        .iter()
        .map(|f| {
            let w = 2.0 * PI * f / sample_rate;
            let a: Complex64 = model
                .coeffs
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (k, c)| acc + c * Complex64::from_polar(1.0, -w * (k + 1) as f64));
            model.gain / a.norm()
        })
        .collect())
}
