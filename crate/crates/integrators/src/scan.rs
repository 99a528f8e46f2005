//! Linear modes as complex one-pole recurrences evaluated with a blocked
//! associative scan.
//!
//! Each resonator `(b1 z + b2) / ((z - p)(z - conj p))` splits into
//! `x^{n+1} = p x^n + beta e^n`, `q^n = 2 Re x^n`, with
//! `p = exp((-gamma + i w~) T)`, `beta = p / (p - conj p)` and the input
//! `e^n = b1 u^n + b2 u^{n-1}`. The update is the affine map
//! `x -> p x + beta e^n`, and affine maps compose associatively.

use num_complex::Complex64;
use rayon::prelude::*;

use super::excitation::ModalDrive;
use super::scheme::{start_history, SchemeCoeffs};
use super::simulate::ModalSystem;
use super::trajectory::Trajectory;
use modal_core::error::{Error, Result};
use modal_core::modes::PointReadout;

/// Time steps per scan block. Fixed so results do not depend on the thread
/// count.
pub const SCAN_BLOCK: usize = 1024;

/// The map `x -> a x + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: Complex64,
    pub b: Complex64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) };

    /// `self` followed by `then`: `(a, b) . (c, d) = (a c, c b + d)`.
    #[inline]
    pub fn then(self, then: Affine) -> Affine {
        Affine { a: self.a * then.a, b: then.a * self.b + then.b }
    }

    #[inline]
    pub fn apply(self, x: Complex64) -> Complex64 {
        self.a * x + self.b
    }
}

/// All prefix applications `x0, m0(x0), m1(m0(x0)), ...` (length
/// `maps.len() + 1`), computed blockwise: per-block aggregates in parallel,
/// a sequential carry across blocks, then per-block expansion in parallel.
pub fn prefix_apply(maps: &[Affine], x0: Complex64) -> Vec<Complex64> {
    let aggregates: Vec<Affine> = maps
        .par_chunks(SCAN_BLOCK)
        .map(|block| block.iter().fold(Affine::IDENTITY, |acc, m| acc.then(*m)))
        .collect();
    let mut carries = Vec::with_capacity(aggregates.len());
    let mut x = x0;
    for agg in &aggregates {
        carries.push(x);
        x = agg.apply(x);
    }
    let blocks: Vec<Vec<Complex64>> = maps
        .par_chunks(SCAN_BLOCK)
        .zip(carries.par_iter())
        .map(|(block, &start)| {
            let mut out = Vec::with_capacity(block.len());
            let mut x = start;
            for m in block {
                x = m.apply(x);
                out.push(x);
            }
            out
        })
        .collect();
    let mut out = Vec::with_capacity(maps.len() + 1);
    out.push(x0);
    for b in blocks {
        out.extend(b);
    }
    out
}

/// One mode's pole and partial-fraction residue.
pub fn pole_and_residue(gamma: f64, omega_tilde: f64, period: f64) -> (Complex64, Complex64) {
    let p = Complex64::new(-gamma * period, omega_tilde * period).exp();
    (p, p / (p - p.conj()))
}

/// Complex state at `n = 0` reproducing the real history `q^0`, `q^{-1}`.
pub fn initial_state(q0: f64, q_prev: f64, gamma: f64, omega_tilde: f64, period: f64) -> Complex64 {
    let (s, c) = (omega_tilde * period).sin_cos();
    let re = 0.5 * q0;
    let im = (0.5 * q_prev * (-gamma * period).exp() - re * c) / s;
    Complex64::new(re, im)
}

/// Complex states `x^0 ..= x^{inputs.len()}` of one mode. The free part
/// `p^n x0` uses exact powers `exp(n s T)` so lossless modes keep their
/// magnitude; the forced part is the affine scan started from zero.
pub fn scan_mode(gamma: f64, omega_tilde: f64, period: f64, x0: Complex64, inputs: &[f64]) -> Vec<Complex64> {
    let (p, beta) = pole_and_residue(gamma, omega_tilde, period);
    let maps: Vec<Affine> = inputs.iter().map(|e| Affine { a: p, b: beta * e }).collect();
    let mut out = prefix_apply(&maps, Complex64::new(0.0, 0.0));
    for (n, x) in out.iter_mut().enumerate() {
        let t = n as f64 * period;
        *x += Complex64::new(-gamma * t, omega_tilde * t).exp() * x0;
    }
    out
}

/// Linear simulation by scan; must agree with stepping the FTM recurrence.
pub fn scan_linear(
    system: &ModalSystem,
    drive: &ModalDrive,
    samples: usize,
    readout: Option<&PointReadout>,
) -> Result<Trajectory> {
    if !system.hook.is_linear() {
        return Err(Error::Incompatible(
            "nonlinear model requires a stepping scheme; use simulate with ftm or sv".into(),
        ));
    }
    let SchemeCoeffs::Ftm(coeffs) = &system.coeffs else {
        return Err(Error::arg("scan_linear uses the impulse-invariant (ftm) coefficients"));
    };
    let bank = &system.bank;
    bank.require_underdamped()?;
    let m = bank.len();
    if drive.modes() != m {
        return Err(Error::arg(format!("excitation has {} modes, system has {m}", drive.modes())));
    }
    let period = coeffs.period;
    let q_prev = start_history(&drive.q0, &drive.v0, bank, period, &system.hook);
    let steps = samples.saturating_sub(1);
    let series: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let x0 = initial_state(drive.q0[k], q_prev[k], bank.gamma[k], bank.omega_tilde[k], period);
            let input = |n: usize| drive.shape[k] * drive.signal.get(n).copied().unwrap_or(0.0);
            let inputs: Vec<f64> = (0..steps)
                .map(|n| {
                    let prev = if n == 0 { 0.0 } else { input(n - 1) };
                    coeffs.b1[k] * input(n) + coeffs.b2[k] * prev
                })
                .collect();
            let states = scan_mode(bank.gamma[k], bank.omega_tilde[k], period, x0, &inputs);
            let mut q: Vec<f64> = states.iter().map(|x| 2.0 * x.re).collect();
            // q^0 is the given displacement exactly
            if let Some(first) = q.first_mut() {
                *first = drive.q0[k];
            }
            q.truncate(samples);
            q
        })
        .collect();
    let mut modal = vec![0.0; samples * m];
    for (k, s) in series.iter().enumerate() {
        for (n, v) in s.iter().enumerate() {
            modal[n * m + k] = *v;
        }
    }
    if let Some((idx, v)) = modal.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Instability { step: idx / m, mode: idx % m, value: *v });
    }
    let mut traj = Trajectory { sample_rate: 1.0 / period, modes: m, modal, start_prev: q_prev, readout: None };
    if let Some(r) = readout {
        traj.apply_readout(r)?;
    }
    Ok(traj)
}
