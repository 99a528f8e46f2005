use super::bank::OscillatorBank;
use super::excitation::ModalDrive;
use super::hook::NonlinearHook;
use super::trajectory::Trajectory;
use modal_core::error::{Error, Result};

/// Classical fourth-order Runge–Kutta on the first-order form of the modal
/// equations, run at `oversample` times the sample rate and decimated.
/// The sampled force is linearly interpolated between samples.
pub fn rk_reference(
    bank: &OscillatorBank,
    hook: &NonlinearHook,
    drive: &ModalDrive,
    sample_rate: f64,
    samples: usize,
    oversample: usize,
) -> Result<Trajectory> {
    if oversample == 0 {
        return Err(Error::arg("oversample factor must be at least 1"));
    }
    let m = bank.len();
    if drive.modes() != m {
        return Err(Error::arg(format!("excitation has {} modes, system has {m}", drive.modes())));
    }
    let h = 1.0 / (sample_rate * oversample as f64);
    let mut scratch = vec![0.0; hook.scratch_len()];
    let mut nl = vec![0.0; m];
    let mut force_lo = vec![0.0; m];
    let mut force_hi = vec![0.0; m];

    // derivative of (q, v) at fractional sample position `frac` in [0, 1]
    let mut deriv = |q: &[f64], v: &[f64], frac: f64, lo: &[f64], hi: &[f64], dq: &mut [f64], dv: &mut [f64]| {
        hook.apply(q, &mut scratch, &mut nl);
        for k in 0..m {
            let f = lo[k] + frac * (hi[k] - lo[k]);
            dq[k] = v[k];
            dv[k] = f - nl[k] - 2.0 * bank.gamma[k] * v[k] - bank.omega2[k] * q[k];
        }
    };

    let mut q = drive.q0.clone();
    let mut v = drive.v0.clone();
    let (mut k1q, mut k1v) = (vec![0.0; m], vec![0.0; m]);
    let (mut k2q, mut k2v) = (vec![0.0; m], vec![0.0; m]);
    let (mut k3q, mut k3v) = (vec![0.0; m], vec![0.0; m]);
    let (mut k4q, mut k4v) = (vec![0.0; m], vec![0.0; m]);
    let (mut tq, mut tv) = (vec![0.0; m], vec![0.0; m]);
    let mut modal = Vec::with_capacity(samples * m);
    let inv = 1.0 / oversample as f64;
    for n in 0..samples {
        modal.extend_from_slice(&q);
        if n + 1 == samples {
            break;
        }
        drive.force_at(n, &mut force_lo);
        drive.force_at(n + 1, &mut force_hi);
        for sub in 0..oversample {
            let f0 = sub as f64 * inv;
            let fm = (sub as f64 + 0.5) * inv;
            let f1 = (sub as f64 + 1.0) * inv;
            deriv(&q, &v, f0, &force_lo, &force_hi, &mut k1q, &mut k1v);
            for k in 0..m {
                tq[k] = q[k] + 0.5 * h * k1q[k];
                tv[k] = v[k] + 0.5 * h * k1v[k];
            }
            deriv(&tq, &tv, fm, &force_lo, &force_hi, &mut k2q, &mut k2v);
            for k in 0..m {
                tq[k] = q[k] + 0.5 * h * k2q[k];
                tv[k] = v[k] + 0.5 * h * k2v[k];
            }
            deriv(&tq, &tv, fm, &force_lo, &force_hi, &mut k3q, &mut k3v);
            for k in 0..m {
                tq[k] = q[k] + h * k3q[k];
                tv[k] = v[k] + h * k3v[k];
            }
            deriv(&tq, &tv, f1, &force_lo, &force_hi, &mut k4q, &mut k4v);
            for k in 0..m {
                q[k] += h / 6.0 * (k1q[k] + 2.0 * k2q[k] + 2.0 * k3q[k] + k4q[k]);
                v[k] += h / 6.0 * (k1v[k] + 2.0 * k2v[k] + 2.0 * k3v[k] + k4v[k]);
            }
        }
        if let Some(mode) = q.iter().position(|x| !x.is_finite()) {
            return Err(Error::Instability { step: n + 1, mode, value: q[mode] });
        }
    }
    Ok(Trajectory { sample_rate, modes: m, modal, start_prev: Vec::new(), readout: None })
}
