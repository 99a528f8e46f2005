//! Differentiable objectives: simulate or evaluate the transfer function,
//! compare spectra, and pull the loss gradient back to the parameters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::adjoint::{bptt, coeff_chain, omega2_chain, CoeffGrads};
use super::loss::{loss_total, loss_with_grad, Layout, LossValue, LossWeights};
use super::params::{ModalGrad, ModalParams, ModelFamily, ParamKind, ParamVector, Transform};
use modal_analysis::{Envelope, Spectrogram, StftConfig, StftPlan};
use modal_core::error::{Error, Result};
use modal_integrators::{ftm_coeffs, simulate, ModalDrive, SchemeKind, Trajectory};

/// A scalar loss of the model parameters with an exact gradient.
pub trait Objective: Sync {
    fn family(&self) -> &ModelFamily;

    fn loss(&self, params: &ModalParams) -> Result<LossValue>;

    fn loss_and_grad(&self, params: &ModalParams) -> Result<(LossValue, ModalGrad)>;
}

/// Spectrogram loss of the simulated readout against a target signal,
/// differentiated through the whole time recurrence.
#[derive(Debug, Clone)]
pub struct TimeDomainObjective {
    family: ModelFamily,
    drive: ModalDrive,
    samples: usize,
    plan: StftPlan,
    target: Spectrogram,
    weights: LossWeights,
}

impl TimeDomainObjective {
    /// The simulation runs for as many samples as `target` holds.
    pub fn new(
        family: ModelFamily,
        drive: ModalDrive,
        target: &[f64],
        stft: StftConfig,
        weights: LossWeights,
    ) -> Result<Self> {
        weights.validate()?;
        if drive.modes() != family.modes() {
            return Err(Error::arg(format!("excitation has {} modes, model has {}", drive.modes(), family.modes())));
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("target signal contains non-finite samples"));
        }
        let plan = StftPlan::new(stft)?;
        let samples = target.len();
        let target = plan.magnitude(target, family.sample_rate)?;
        Ok(Self { samples, family, drive, plan, target, weights })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn target(&self) -> &Spectrogram {
        &self.target
    }

    pub fn drive(&self) -> &ModalDrive {
        &self.drive
    }

    /// Readout signal of `params` over `samples` samples.
    pub fn synthesize(&self, params: &ModalParams, samples: usize) -> Result<Vec<f64>> {
        let traj = simulate(&params.system(&self.family)?, &self.drive, samples, None)?;
        Ok(readout(&traj, &params.weights))
    }

    fn layout(&self) -> Layout<'_> {
        Layout { frames: self.target.frames, bins: self.target.bins, freqs: &self.target.bin_freqs }
    }
}

fn readout(traj: &Trajectory, weights: &[f64]) -> Vec<f64> {
    (0..traj.len()).map(|n| traj.frame(n).iter().zip(weights).map(|(q, w)| q * w).sum()).collect()
}

impl Objective for TimeDomainObjective {
    fn family(&self) -> &ModelFamily {
        &self.family
    }

    fn loss(&self, params: &ModalParams) -> Result<LossValue> {
        let y = self.synthesize(params, self.samples)?;
        let pred = self.plan.magnitude(&y, self.family.sample_rate)?;
        loss_total(&self.target.mags, &pred.mags, self.layout(), &self.weights)
    }

    fn loss_and_grad(&self, params: &ModalParams) -> Result<(LossValue, ModalGrad)> {
        let system = params.system(&self.family)?;
        let traj = simulate(&system, &self.drive, self.samples, None)?;
        let y = readout(&traj, &params.weights);
        let (pred, frames) = self.plan.forward(&y, self.family.sample_rate)?;
        let (value, grad_mags) = loss_with_grad(&self.target.mags, &pred.mags, self.layout(), &self.weights)?;
        let y_bar = self.plan.backward(&frames, &grad_mags);
        let grad = bptt(&self.family, params, &system, &self.drive, &traj, &y_bar);
        Ok((value, grad))
    }
}

/// Loss of the sampled transfer-function magnitude against a target
/// envelope, treated as a single spectral frame.
#[derive(Debug, Clone)]
pub struct FrequencyDomainObjective {
    family: ModelFamily,
    target: Envelope,
    weights: LossWeights,
}

impl FrequencyDomainObjective {
    pub fn new(family: ModelFamily, target: Envelope, weights: LossWeights) -> Result<Self> {
        weights.validate()?;
        if !family.is_linear() {
            return Err(Error::Incompatible("frequency-domain fitting needs a linear model".into()));
        }
        if family.scheme != SchemeKind::Ftm {
            return Err(Error::Incompatible("frequency-domain fitting uses the transfer-function scheme".into()));
        }
        modal_analysis::lpc::check_freqs(&target.freqs, family.sample_rate)?;
        Ok(Self { family, target, weights })
    }

    pub fn target(&self) -> &Envelope {
        &self.target
    }

    /// Complex response of every mode at every target frequency
    /// (`[freq][mode]`), together with the coefficients used.
    fn responses(&self, params: &ModalParams) -> Result<Responses> {
        params.check(&self.family)?;
        let bank = params.bank(&self.family)?;
        let coeffs = ftm_coeffs(&bank, self.family.period(), Some(&params.b2))?;
        let m = self.family.modes();
        let mut num = Vec::with_capacity(self.target.freqs.len() * m);
        let mut den = Vec::with_capacity(num.capacity());
        let mut z = Vec::with_capacity(self.target.freqs.len());
        for f in &self.target.freqs {
            let zf = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * coeffs.period);
            for k in 0..m {
                num.push(coeffs.b1[k] * zf + coeffs.b2[k]);
                den.push(zf * zf + coeffs.a1[k] * zf + coeffs.a2[k]);
            }
            z.push(zf);
        }
        let total: Vec<Complex64> = (0..z.len())
            .map(|i| (0..m).map(|k| params.weights[k] * num[i * m + k] / den[i * m + k]).sum())
            .collect();
        Ok(Responses { bank, num, den, z, total })
    }

    /// `|H(e^{i w T})|` at the target frequencies.
    pub fn magnitude(&self, params: &ModalParams) -> Result<Vec<f64>> {
        Ok(self.responses(params)?.total.iter().map(|h| h.norm()).collect())
    }

    fn layout(&self) -> Layout<'_> {
        Layout { frames: 1, bins: self.target.freqs.len(), freqs: &self.target.freqs }
    }
}

struct Responses {
    bank: modal_integrators::OscillatorBank,
    num: Vec<Complex64>,
    den: Vec<Complex64>,
    z: Vec<Complex64>,
    total: Vec<Complex64>,
}

impl Objective for FrequencyDomainObjective {
    fn family(&self) -> &ModelFamily {
        &self.family
    }

    fn loss(&self, params: &ModalParams) -> Result<LossValue> {
        let mags = self.magnitude(params)?;
        loss_total(&self.target.mags, &mags, self.layout(), &self.weights)
    }

    fn loss_and_grad(&self, params: &ModalParams) -> Result<(LossValue, ModalGrad)> {
        let r = self.responses(params)?;
        let mags: Vec<f64> = r.total.iter().map(|h| h.norm()).collect();
        let (value, gmag) = loss_with_grad(&self.target.mags, &mags, self.layout(), &self.weights)?;
        let m = self.family.modes();
        let mut grad = ModalGrad::zeros_like(params);
        let mut cg = CoeffGrads::zeros(m);
        for (i, h) in r.total.iter().enumerate() {
            let mag = h.norm();
            if mag == 0.0 || gmag[i] == 0.0 {
                continue;
            }
            // d|H| = Re(conj(H) dH) / |H|
            let c = h.conj() * (gmag[i] / mag);
            let z = r.z[i];
            for k in 0..m {
                let (num, den) = (r.num[i * m + k], r.den[i * m + k]);
                let w = params.weights[k];
                grad.0.weights[k] += (c * num / den).re;
                let d_b1 = (c * w * z / den).re;
                let d_b2 = (c * w / den).re;
                let d_a1 = (-c * w * num * z / (den * den)).re;
                let d_a2 = (-c * w * num / (den * den)).re;
                // recurrence form: c1 = -a1, c2 = -a2, in1 = b1, in2 = b2
                cg.c1[k] -= d_a1;
                cg.c2[k] -= d_a2;
                cg.in1[k] += d_b1;
                cg.in2[k] += d_b2;
            }
        }
        let omega2_bar = coeff_chain(SchemeKind::Ftm, &r.bank, self.family.period(), &cg, &mut grad);
        omega2_chain(&self.family, &omega2_bar, &mut grad);
        Ok((value, grad))
    }
}

/// Analytic gradient of `objective` with respect to the physical values of
/// the free parameters.
pub fn gradient(objective: &dyn Objective, params: &ModalParams, free: &ParamVector) -> Result<Vec<f64>> {
    let (_, grad) = objective.loss_and_grad(params)?;
    Ok(free.physical_grad(&grad))
}

/// Relative step of the central differences in [`GradientReport::compute`].
pub const FD_RELATIVE_STEP: f64 = 1e-4;

/// Steps tried by [`GradientReport::converged`], largest first.
pub const FD_STEP_LADDER: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEntry {
    pub param: ParamKind,
    pub analytic: f64,
    pub finite_difference: f64,
    /// Relative step used for `finite_difference`.
    pub step: f64,
    pub relative_error: f64,
}

/// Analytic against central-difference gradients for every free parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub entries: Vec<GradientEntry>,
}

impl GradientReport {
    /// Report with the fixed relative step [`FD_RELATIVE_STEP`].
    pub fn compute(objective: &dyn Objective, params: &ModalParams, free: &ParamVector) -> Result<Self> {
        Self::with_steps(objective, params, free, &[FD_RELATIVE_STEP])
    }

    /// Report with one fixed relative step for every parameter.
    pub fn with_step(objective: &dyn Objective, params: &ModalParams, free: &ParamVector, rel_step: f64) -> Result<Self> {
        Self::with_steps(objective, params, free, &[rel_step])
    }

    /// Per parameter, walks [`FD_STEP_LADDER`] and keeps the quotient where
    /// two successive steps agree best. Losses that oscillate quickly in a
    /// parameter (pitch over many periods) are pre-asymptotic at large
    /// steps, while small steps drown in rounding; the ladder finds the
    /// plateau between the two.
    pub fn converged(objective: &dyn Objective, params: &ModalParams, free: &ParamVector) -> Result<Self> {
        Self::with_steps(objective, params, free, &FD_STEP_LADDER)
    }

    fn with_steps(objective: &dyn Objective, params: &ModalParams, free: &ParamVector, steps: &[f64]) -> Result<Self> {
        if steps.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            return Err(Error::arg("relative steps must be in (0, 1)"));
        }
        let analytic = gradient(objective, params, free)?;
        let mut entries = Vec::with_capacity(free.len());
        for ((kind, transform), a) in free.kinds.iter().zip(&free.transforms).zip(analytic) {
            let x = params.get(*kind);
            // Signed parameters near zero step on their natural scale.
            let unit = match transform {
                Transform::Linear { scale } => x.abs().max(*scale),
                _ if x == 0.0 => transform.scale(),
                _ => x.abs(),
            };
            let eval = |v: f64| -> Result<f64> {
                let mut p = params.clone();
                p.set(*kind, v);
                Ok(objective.loss(&p)?.total)
            };
            let quotients: Vec<f64> = steps
                .iter()
                .map(|s| {
                    let h = s * unit;
                    Ok((eval(x + h)? - eval(x - h)?) / (2.0 * h))
                })
                .collect::<Result<_>>()?;
            let pick = (0..quotients.len().saturating_sub(1))
                .min_by(|&i, &j| {
                    let di = (quotients[i] - quotients[i + 1]).abs();
                    let dj = (quotients[j] - quotients[j + 1]).abs();
                    di.total_cmp(&dj)
                })
                .map_or(0, |i| i + 1);
            let fd = quotients[pick];
            let scale = a.abs().max(fd.abs());
            let relative_error = if scale == 0.0 { 0.0 } else { (a - fd).abs() / scale };
            entries.push(GradientEntry {
                param: *kind,
                analytic: a,
                finite_difference: fd,
                step: steps[pick],
                relative_error,
            });
        }
        Ok(Self { entries })
    }

    pub fn max_relative_error(&self) -> f64 {
        self.entries.iter().map(|e| e.relative_error).fold(0.0, f64::max)
    }
}
