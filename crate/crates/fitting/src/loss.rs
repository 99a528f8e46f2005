//! Spectral losses and their gradients with respect to the prediction.

use serde::{Deserialize, Serialize};

use modal_core::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub epsilon: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, eta: 1.0, epsilon: 1e-8 }
    }
}

impl LossWeights {
    /// Weights used for plate-stiffness fits.
    pub fn plate_preset() -> Self {
        Self { alpha: 0.1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.alpha, self.beta, self.eta];
        if ws.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || ws.iter().all(|w| *w == 0.0) {
            return Err(Error::arg("loss weights must be non-negative with at least one positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::arg("loss epsilon must be positive"));
        }
        Ok(())
    }
}

/// Shape of magnitude data: `frames` rows of `bins` values at `freqs`.
#[derive(Debug, Clone, Copy)]
pub struct Layout<'a> {
    pub frames: usize,
    pub bins: usize,
    pub freqs: &'a [f64],
}

impl Layout<'_> {
    fn check(&self, target: &[f64], pred: &[f64]) -> Result<()> {
        let n = self.frames * self.bins;
        if target.len() != n || pred.len() != n || self.freqs.len() != self.bins {
            return Err(Error::arg(format!(
                "loss inputs must be {} x {} (target {}, prediction {}, {} frequencies)",
                self.frames,
                self.bins,
                target.len(),
                pred.len(),
                self.freqs.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub total: f64,
    pub log: f64,
    pub sc: f64,
    pub sot: f64,
    /// Frames left out of the transport term because one side had no mass.
    pub skipped_frames: usize,
}

fn check_equal(target: &[f64], pred: &[f64]) -> Result<()> {
    if target.len() != pred.len() {
        return Err(Error::arg(format!("shape mismatch: {} vs {} values", target.len(), pred.len())));
    }
    Ok(())
}

/// `sum |log(Y + eps) - log(Yhat + eps)|`.
pub fn loss_log(target: &[f64], pred: &[f64], epsilon: f64) -> Result<f64> {
    check_equal(target, pred)?;
    Ok(target.iter().zip(pred).map(|(y, p)| ((y + epsilon).ln() - (p + epsilon).ln()).abs()).sum())
}

fn loss_log_grad(target: &[f64], pred: &[f64], epsilon: f64, scale: f64, grad: &mut [f64]) {
    for ((g, y), p) in grad.iter_mut().zip(target).zip(pred) {
        let d = (y + epsilon).ln() - (p + epsilon).ln();
        if d != 0.0 {
            *g -= scale * d.signum() / (p + epsilon);
        }
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// `||Y - Yhat||_F / ||Y||_F`.
pub fn loss_sc(target: &[f64], pred: &[f64]) -> Result<f64> {
    check_equal(target, pred)?;
    let denom = norm(target.iter().copied());
    if denom == 0.0 {
        return Err(Error::arg("spectral convergence is undefined for an all-zero target"));
    }
    Ok(norm(target.iter().zip(pred).map(|(y, p)| y - p)) / denom)
}

fn loss_sc_grad(target: &[f64], pred: &[f64], scale: f64, grad: &mut [f64]) {
    let denom = norm(target.iter().copied());
    let diff = norm(target.iter().zip(pred).map(|(y, p)| y - p));
    if diff == 0.0 {
        return;
    }
    for ((g, y), p) in grad.iter_mut().zip(target).zip(pred) {
        *g -= scale * (y - p) / (diff * denom);
    }
}

/// Per-frame 1-D Wasserstein-1 distance between unit-mass frames, computed
/// as the L1 distance between CDFs weighted by bin spacing, averaged over
/// the frames where both sides carry mass. Returns the loss and the number
/// of skipped frames.
pub fn loss_sot(target: &[f64], pred: &[f64], layout: Layout<'_>) -> Result<(f64, usize)> {
    layout.check(target, pred)?;
    sot_impl(target, pred, layout, None)
}

fn sot_impl(target: &[f64], pred: &[f64], layout: Layout<'_>, mut grad: Option<(&mut [f64], f64)>) -> Result<(f64, usize)> {
    let bins = layout.bins;
    let widths: Vec<f64> = layout.freqs.windows(2).map(|w| w[1] - w[0]).collect();
    let mut total = 0.0;
    let mut used = 0usize;
    let mut frame_grads: Vec<(usize, Vec<f64>)> = Vec::new();
    for f in 0..layout.frames {
        let y = &target[f * bins..(f + 1) * bins];
        let p = &pred[f * bins..(f + 1) * bins];
        let (my, mp): (f64, f64) = (y.iter().sum(), p.iter().sum());
        if !(my > 0.0 && mp > 0.0) {
            continue;
        }
        used += 1;
        let (mut cy, mut cp) = (0.0, 0.0);
        let mut dist = 0.0;
        let mut signs = vec![0.0; bins];
        for j in 0..bins.saturating_sub(1) {
            cy += y[j] / my;
            cp += p[j] / mp;
            let d = cp - cy;
            dist += d.abs() * widths[j];
            signs[j] = d.signum() * if d == 0.0 { 0.0 } else { widths[j] };
        }
        total += dist;
        if grad.is_some() {
            // dW/dP_k = sum_{j >= k} sign_j w_j; then through P = p / M
            let mut tail = vec![0.0; bins];
            let mut acc = 0.0;
            for k in (0..bins).rev() {
                acc += signs[k];
                tail[k] = acc;
            }
            let mean: f64 = tail.iter().zip(p).map(|(t, v)| t * v / mp).sum();
            frame_grads.push((f, tail.iter().map(|t| (t - mean) / mp).collect()));
        }
    }
    if used == 0 {
        return Err(Error::arg("spectral transport loss: every frame has zero mass"));
    }
    if let Some((g, scale)) = grad.as_mut() {
        for (f, fg) in frame_grads {
            for (k, v) in fg.iter().enumerate() {
                g[f * bins + k] += *scale * v / used as f64;
            }
        }
    }
    Ok((total / used as f64, layout.frames - used))
}

/// Weighted sum of the three losses.
pub fn loss_total(target: &[f64], pred: &[f64], layout: Layout<'_>, weights: &LossWeights) -> Result<LossValue> {
    loss_impl(target, pred, layout, weights, None)
}

/// Loss and its gradient with respect to `pred`.
pub fn loss_with_grad(
    target: &[f64],
    pred: &[f64],
    layout: Layout<'_>,
    weights: &LossWeights,
) -> Result<(LossValue, Vec<f64>)> {
    let mut grad = vec![0.0; pred.len()];
    let v = loss_impl(target, pred, layout, weights, Some(&mut grad))?;
    Ok((v, grad))
}

fn loss_impl(
    target: &[f64],
    pred: &[f64],
    layout: Layout<'_>,
    weights: &LossWeights,
    mut grad: Option<&mut [f64]>,
) -> Result<LossValue> {
    weights.validate()?;
    layout.check(target, pred)?;
    let mut v = LossValue::default();
    if weights.alpha > 0.0 {
        v.log = loss_log(target, pred, weights.epsilon)?;
        if let Some(g) = grad.as_deref_mut() {
            loss_log_grad(target, pred, weights.epsilon, weights.alpha, g);
        }
    }
    if weights.beta > 0.0 {
        v.sc = loss_sc(target, pred)?;
        if let Some(g) = grad.as_deref_mut() {
            loss_sc_grad(target, pred, weights.beta, g);
        }
    }
    if weights.eta > 0.0 {
        let (sot, skipped) = sot_impl(target, pred, layout, grad.as_deref_mut().map(|g| (g, weights.eta)))?;
        v.sot = sot;
        v.skipped_frames = skipped;
    }
    v.total = weights.alpha * v.log + weights.beta * v.sc + weights.eta * v.sot;
    Ok(v)
}
