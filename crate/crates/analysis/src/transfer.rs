use std::f64::consts::PI;

use num_complex::Complex64;

use super::lpc::check_freqs;
use modal_core::error::{Error, Result};
use modal_integrators::FtmCoeffs;

/// Complex modal response `sum_mu w_mu (b1 z + b2) / (z² + a1 z + a2)` at
/// `z = e^{i w T}`, with `T` taken from the coefficients.
pub fn tf_response(coeffs: &FtmCoeffs, weights: &[f64], freqs: &[f64]) -> Result<Vec<Complex64>> {
    if weights.len() != coeffs.a1.len() {
        return Err(Error::arg(format!("expected {} output weights, got {}", coeffs.a1.len(), weights.len())));
    }
    check_freqs(freqs, 1.0 / coeffs.period)?;
    Ok(freqs
        .iter()
        .map(|f| {
            let z = Complex64::from_polar(1.0, 2.0 * PI * f * coeffs.period);
            (0..weights.len())
                .map(|m| {
                    let num = coeffs.b1[m] * z + coeffs.b2[m];
                    let den = z * z + coeffs.a1[m] * z + coeffs.a2[m];
                    weights[m] * num / den
                })
                .sum()
        })
        .collect())
}

/// Magnitude of [`tf_response`].
pub fn tf_magnitude(coeffs: &FtmCoeffs, weights: &[f64], freqs: &[f64]) -> Result<Vec<f64>> {
    Ok(tf_response(coeffs, weights, freqs)?.iter().map(|h| h.norm()).collect())
}
