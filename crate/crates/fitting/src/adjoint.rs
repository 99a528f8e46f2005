//! Hand-written reverse-mode passes through coefficient maps, the stepping
//! recurrence and the nonlinear forces.

use super::params::{FamilyNonlinearity, ModalGrad, ModalParams, ModelFamily};
use modal_integrators::{ModalDrive, ModalSystem, OscillatorBank, SchemeKind, Trajectory};

/// Adjoints of the unified recurrence coefficients, per mode.
#[derive(Debug, Clone)]
pub(crate) struct CoeffGrads {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub in1: Vec<f64>,
    pub in2: Vec<f64>,
}

impl CoeffGrads {
    pub fn zeros(m: usize) -> Self {
        Self { c1: vec![0.0; m], c2: vec![0.0; m], in1: vec![0.0; m], in2: vec![0.0; m] }
    }
}

/// Pulls coefficient adjoints back to damping, `b2` and (returned)
/// `omega²`.
pub(crate) fn coeff_chain(
    scheme: SchemeKind,
    bank: &OscillatorBank,
    period: f64,
    cg: &CoeffGrads,
    grad: &mut ModalGrad,
) -> Vec<f64> {
    let t = period;
    let mut omega2_bar = vec![0.0; bank.len()];
    for k in 0..bank.len() {
        let gamma = bank.gamma[k];
        match scheme {
            SchemeKind::Ftm => {
                let wt = bank.omega_tilde[k];
                let e = (-gamma * t).exp();
                let (s, c) = (wt * t).sin_cos();
                let wt_bar = cg.c1[k] * (-2.0 * t * e * s) + cg.in1[k] * t * e * (t * c * wt - s) / (wt * wt);
                grad.0.gamma[k] += cg.c1[k] * (-2.0 * t * e * c)
                    + cg.c2[k] * (2.0 * t * e * e)
                    + cg.in1[k] * (-t * t * e * s / wt)
                    - wt_bar * gamma / wt;
                omega2_bar[k] += wt_bar / (2.0 * wt);
                grad.0.b2[k] += cg.in2[k];
            }
            SchemeKind::Sv => {
                let w2 = bank.omega2[k];
                let den = 1.0 + gamma * t;
                let den2 = den * den;
                grad.0.gamma[k] += cg.c1[k] * (-t * (2.0 - w2 * t * t) / den2)
                    + cg.c2[k] * (2.0 * t / den2)
                    + cg.in1[k] * (-t * t * t / den2);
                omega2_bar[k] += cg.c1[k] * (-t * t / den);
            }
        }
    }
    omega2_bar
}

/// `omega² = D lambda² + T0 lambda`.
pub(crate) fn omega2_chain(family: &ModelFamily, omega2_bar: &[f64], grad: &mut ModalGrad) {
    for (l, g) in family.eigenvalues.iter().zip(omega2_bar) {
        grad.0.d_hat += g * l * l;
        grad.0.t0_hat += g * l;
    }
}

/// Scratch for the nonlinear force and its adjoint.
pub(crate) struct NlWork {
    l: Vec<f64>,
    r: Vec<f64>,
    eta: Vec<f64>,
}

impl NlWork {
    pub fn new(family: &ModelFamily) -> Self {
        let m = family.modes();
        let ns = family.n_psi();
        Self { l: vec![0.0; ns * m], r: vec![0.0; ns * m], eta: vec![0.0; ns] }
    }
}

/// Nonlinear force at `q` into `out` (dense evaluation from the parameters).
pub(crate) fn nl_force(family: &ModelFamily, params: &ModalParams, q: &[f64], work: &mut NlWork, out: &mut [f64]) {
    match &family.nonlinearity {
        FamilyNonlinearity::Linear => out.iter_mut().for_each(|v| *v = 0.0),
        FamilyNonlinearity::Tension { out_weight, energy_weight } => {
            let e: f64 = q.iter().zip(energy_weight).map(|(q, b)| b * q * q).sum();
            for ((o, q), a) in out.iter_mut().zip(q).zip(out_weight) {
                *o = params.tau * a * q * e;
            }
        }
        FamilyNonlinearity::VonKarman { kappa, .. } => {
            vk_stage(family, params, q, work);
            out.iter_mut().for_each(|v| *v = 0.0);
            let m = q.len();
            for (n, eta) in work.eta.iter().enumerate() {
                let r = &work.r[n * m..(n + 1) * m];
                for (o, r) in out.iter_mut().zip(r) {
                    *o += kappa * eta * r;
                }
            }
        }
    }
}

/// `l_n = H_n q`, `r_n = H_n^T q`, `eta_n = q . l_n / zeta⁴_n`.
fn vk_stage(family: &ModelFamily, params: &ModalParams, q: &[f64], work: &mut NlWork) {
    let FamilyNonlinearity::VonKarman { n_psi, zeta4, .. } = &family.nonlinearity else { return };
    let m = q.len();
    for n in 0..*n_psi {
        let slice = &params.h[n * m * m..(n + 1) * m * m];
        let l = &mut work.l[n * m..(n + 1) * m];
        let r = &mut work.r[n * m..(n + 1) * m];
        r.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..m {
            let row = &slice[a * m..(a + 1) * m];
            l[a] = row.iter().zip(q).map(|(h, q)| h * q).sum();
            for (rb, h) in r.iter_mut().zip(row) {
                *rb += h * q[a];
            }
        }
        work.eta[n] = q.iter().zip(l.iter()).map(|(q, l)| q * l).sum::<f64>() / zeta4[n];
    }
}

/// Accumulates `scale J(q)^T g` into `grad_q` (when given) and
/// `scale (d f_nl / d theta)^T g` into the parameter gradient.
pub(crate) fn nl_vjp(
    family: &ModelFamily,
    params: &ModalParams,
    q: &[f64],
    g: &[f64],
    scale: f64,
    work: &mut NlWork,
    grad_q: Option<&mut [f64]>,
    grad: &mut ModalGrad,
) {
    match &family.nonlinearity {
        FamilyNonlinearity::Linear => {}
        FamilyNonlinearity::Tension { out_weight, energy_weight } => {
            let e: f64 = q.iter().zip(energy_weight).map(|(q, b)| b * q * q).sum();
            let s: f64 = g.iter().zip(out_weight).zip(q).map(|((g, a), q)| g * a * q).sum();
            grad.0.tau += scale * s * e;
            if let Some(gq) = grad_q {
                let tau = params.tau;
                for k in 0..q.len() {
                    gq[k] += scale * tau * (out_weight[k] * g[k] * e + 2.0 * energy_weight[k] * q[k] * s);
                }
            }
        }
        FamilyNonlinearity::VonKarman { n_psi, zeta4, kappa } => {
            vk_stage(family, params, q, work);
            let m = q.len();
            let mut gq = grad_q;
            for n in 0..*n_psi {
                let l = &work.l[n * m..(n + 1) * m];
                let r = &work.r[n * m..(n + 1) * m];
                let eta = work.eta[n];
                let xi = kappa * g.iter().zip(r).map(|(g, r)| g * r).sum::<f64>();
                let hb = &mut grad.0.h[n * m * m..(n + 1) * m * m];
                let u = scale * xi / zeta4[n];
                let w = scale * kappa * eta;
                for a in 0..m {
                    let row = &mut hb[a * m..(a + 1) * m];
                    let (ua, wa) = (u * q[a], w * q[a]);
                    for b in 0..m {
                        row[b] += ua * q[b] + wa * g[b];
                    }
                }
                if let Some(gq) = gq.as_deref_mut() {
                    let slice = &params.h[n * m * m..(n + 1) * m * m];
                    for a in 0..m {
                        let hg: f64 = slice[a * m..(a + 1) * m].iter().zip(g).map(|(h, g)| h * g).sum();
                        gq[a] += w * hg + u * (l[a] + r[a]);
                    }
                }
            }
        }
    }
}

/// Backpropagation through the full recurrence. `y_bar` is the gradient
/// with respect to the readout signal `y^n = sum_mu w_mu q_mu^n`.
pub(crate) fn bptt(
    family: &ModelFamily,
    params: &ModalParams,
    system: &ModalSystem,
    drive: &ModalDrive,
    traj: &Trajectory,
    y_bar: &[f64],
) -> ModalGrad {
    let bank = &system.bank;
    let m = family.modes();
    let samples = traj.len();
    let period = family.period();
    let rec = system.coeffs.recurrence();
    let mut grad = ModalGrad::zeros_like(params);
    let mut work = NlWork::new(family);

    // row n + 1 holds the adjoint of q^n; row 0 is q^{-1}
    let mut q_bar = vec![0.0; (samples + 1) * m];
    for n in 0..samples {
        let q = traj.frame(n);
        for k in 0..m {
            q_bar[(n + 1) * m + k] = params.weights[k] * y_bar[n];
            grad.0.weights[k] += y_bar[n] * q[k];
        }
    }
    let q_at = |n: isize| -> &[f64] {
        if n < 0 {
            &traj.start_prev
        } else {
            traj.frame(n as usize)
        }
    };

    let mut cg = CoeffGrads::zeros(m);
    let mut u_bar = vec![0.0; m];
    let mut u_bar_prev = vec![0.0; m];
    let mut u_cur = vec![0.0; m];
    let mut u_prev = vec![0.0; m];
    let mut nl = vec![0.0; m];
    let mut force = vec![0.0; m];
    let mut gq = vec![0.0; m];
    let mut a_buf = vec![0.0; m];
    if samples >= 2 {
        let last = samples - 2;
        drive.force_at(last, &mut force);
        nl_force(family, params, q_at(last as isize), &mut work, &mut nl);
        for k in 0..m {
            u_cur[k] = force[k] - nl[k];
        }
    }
    for n in (0..samples.saturating_sub(1)).rev() {
        if n >= 1 {
            drive.force_at(n - 1, &mut force);
            nl_force(family, params, q_at(n as isize - 1), &mut work, &mut nl);
            for k in 0..m {
                u_prev[k] = force[k] - nl[k];
            }
        } else {
            u_prev.iter_mut().for_each(|v| *v = 0.0);
        }
        let (qn, qp) = (q_at(n as isize), q_at(n as isize - 1));
        // rows: n + 2 is q^{n+1}, n + 1 is q^n, n is q^{n-1}
        a_buf.copy_from_slice(&q_bar[(n + 2) * m..(n + 3) * m]);
        for k in 0..m {
            let a = a_buf[k];
            cg.c1[k] += a * qn[k];
            cg.c2[k] += a * qp[k];
            cg.in1[k] += a * u_cur[k];
            cg.in2[k] += a * u_prev[k];
            q_bar[(n + 1) * m + k] += rec.c1[k] * a;
            q_bar[n * m + k] += rec.c2[k] * a;
            u_bar[k] += rec.in1[k] * a;
            u_bar_prev[k] += rec.in2[k] * a;
        }
        if !family.is_linear() {
            gq.iter_mut().for_each(|v| *v = 0.0);
            nl_vjp(family, params, qn, &u_bar, -1.0, &mut work, Some(&mut gq), &mut grad);
            for k in 0..m {
                q_bar[(n + 1) * m + k] += gq[k];
            }
        }
        std::mem::swap(&mut u_bar, &mut u_bar_prev);
        u_bar_prev.iter_mut().for_each(|v| *v = 0.0);
        std::mem::swap(&mut u_cur, &mut u_prev);
    }

    // q^{-1} = q0 - T v0 + T²/2 (-2 gamma v0 - omega² q0 - f_nl(q0))
    let half = 0.5 * period * period;
    let start_bar = &q_bar[..m];
    let mut omega2_bar = vec![0.0; m];
    for k in 0..m {
        grad.0.gamma[k] += start_bar[k] * (-2.0 * half * drive.v0[k]);
        omega2_bar[k] += start_bar[k] * (-half * drive.q0[k]);
    }
    if !family.is_linear() {
        let g = start_bar.to_vec();
        nl_vjp(family, params, &drive.q0, &g, -half, &mut work, None, &mut grad);
    }
    let from_coeffs = coeff_chain(family.scheme, bank, period, &cg, &mut grad);
    for (a, b) in omega2_bar.iter_mut().zip(from_coeffs) {
        *a += b;
    }
    omega2_chain(family, &omega2_bar, &mut grad);
    grad
}
