//! Acceptance checks. Each criterion prints one PASS or FAIL line; the
//! target fails if any criterion does.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use modal_analysis::{bark_grid, stft, Envelope, Spectrogram, StftConfig, WindowKind};
use modal_bench::{run_benchmark, BenchModel, BenchSettings};
use modal_core::model::{derive_normalized, validated, Geometry, ModelSpec, Nonlinearity, ValidatedSpec};
use modal_core::modes::{ModeBasis, Point};
use modal_coupling::{c_from_h, compute_h, vk_nl_force, CouplingTensors, VkContraction, DEFAULT_RESOLUTION};
use modal_fitting::{
    fit, loss_log, loss_sc, loss_sot, FitConfig, FrequencyDomainObjective, GradientReport, Layout, LossWeights,
    ModalParams, ModelFamily, Objective, ParamKind, ParamVector, TimeDomainObjective,
};
use modal_integrators::{
    rk_reference, samples_for, scan_linear, simulate, Excitation, ForceSignal, ModalDrive, ModalSystem, Pluck,
    RaisedCosine, SchemeKind,
};
use modal_presets::{Preset, PLATE_VK_D_HAT};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

const RATE: f64 = 44_100.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "linear string spectral peaks", criterion_1),
        (2, "scheme equivalence", criterion_2),
        (3, "Störmer–Verlet convergence order", criterion_3),
        (4, "tension-modulated pitch glide", criterion_4),
        (5, "coupling tensors", criterion_5),
        (6, "gradient contract", criterion_6),
        (7, "plate stiffness recovery", criterion_7),
        (8, "coupling tensor recovery", criterion_8),
        (9, "loss properties", criterion_9),
        (10, "benchmark harness", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| outcome(false, format!("panicked: {}", panic_message(&e))));
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {id} ({name}): {} [{:.1?}]", result.detail, started.elapsed());
        if !result.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn string_spec(preset: Preset, decay: Option<f64>) -> ValidatedSpec {
    let mut spec: ModelSpec = preset.spec();
    if let Some(gamma) = decay {
        spec.material.d1 = 2.0 * spec.material.rho * gamma;
        spec.material.d3 = 0.0;
    }
    validated(&spec).unwrap()
}

/// Damped angular frequencies and decay rates of a fixed string, written
/// out from the closed-form eigenvalues `(mu pi / L)²`.
fn string_modes_closed_form(spec: &ValidatedSpec, modes: usize) -> Vec<(f64, f64)> {
    let Geometry::String { length, .. } = spec.geometry else { panic!("not a string") };
    let rho = spec.material.rho;
    let d_hat = spec.stiffness.unwrap_or(0.0) / rho;
    let t0_hat = spec.tension / rho;
    (1..=modes)
        .map(|mu| {
            let lambda = (mu as f64 * PI / length).powi(2);
            let omega2 = d_hat * lambda * lambda + t0_hat * lambda;
            let gamma = (spec.material.d1 + spec.material.d3 * lambda) / (2.0 * rho);
            ((omega2 - gamma * gamma).sqrt(), gamma)
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let spec = string_spec(Preset::StringLinear, None);
    let basis = ModeBasis::string(0.65, 40).unwrap();
    let system = ModalSystem::for_model(&spec, &basis, None, SchemeKind::Ftm, RATE).unwrap();
    // pluck and pickup away from the nodes of the first ten modes
    let excitation = Excitation::Pluck(Pluck { location: Point::on_line(0.137), amplitude: 1e-3 });
    let drive = ModalDrive::resolve(&excitation, &basis, spec.effective_density(), RATE).unwrap();
    let readout = basis.readout(Point::on_line(0.05)).unwrap();
    let traj = simulate(&system, &drive, samples_for(1.0, RATE), Some(&readout)).unwrap();
    let y = traj.readout_signal().unwrap();

    const N: usize = 8192;
    let mut buf: Vec<Complex64> = (0..N)
        .map(|n| Complex64::new(y[n] * (0.5 - 0.5 * (2.0 * PI * n as f64 / N as f64).cos()), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(N).process(&mut buf);
    let mag: Vec<f64> = buf[..N / 2].iter().map(|c| c.norm()).collect();
    let elapsed = started.elapsed().as_secs_f64();

    let bin_hz = RATE / N as f64;
    let mut worst = 0.0f64;
    for (mu, (omega_tilde, _)) in string_modes_closed_form(&spec, 10).into_iter().enumerate() {
        let expected = omega_tilde / (2.0 * PI) / bin_hz;
        let centre = expected.round() as usize;
        let peak = (centre - 3..=centre + 3).max_by(|a, b| mag[*a].total_cmp(&mag[*b])).unwrap();
        let is_peak = mag[peak] > mag[peak - 1] && mag[peak] > mag[peak + 1];
        let off = if is_peak { (peak as f64 - expected).abs() } else { f64::INFINITY };
        if off > 1.0 {
            println!("  mode {}: expected bin {expected:.2}, peak at {peak}", mu + 1);
        }
        worst = worst.max(off);
    }
    outcome(
        worst <= 1.0 && elapsed < 5.0,
        format!("worst peak offset {worst:.3} bins (limit 1), simulation + FFT {elapsed:.2} s (limit 5)"),
    )
}

fn criterion_2() -> Outcome {
    // transfer function against the impulse response
    let spec = string_spec(Preset::StringLinear, Some(40.0));
    let basis = ModeBasis::string(0.65, 40).unwrap();
    let system = ModalSystem::for_model(&spec, &basis, None, SchemeKind::Ftm, RATE).unwrap();
    let readout = basis.readout(Point::on_line(0.05)).unwrap();
    let samples = 1 << 16;
    let traj = simulate(&system, &ModalDrive::impulse(40), samples, Some(&readout)).unwrap();
    let h = traj.readout_signal().unwrap();
    let tail = max_abs(&h[samples - 100..]) / max_abs(h);
    let period = 1.0 / RATE;
    let modes = string_modes_closed_form(&spec, 40);
    let mut worst_tf = 0.0f64;
    for i in 0..64 {
        let f = 50.0 + (15_000.0 - 50.0) * i as f64 / 63.0;
        let w = 2.0 * PI * f * period;
        let dtft: Complex64 = h.iter().enumerate().map(|(n, v)| Complex64::from_polar(*v, -w * n as f64)).sum();
        // impulse-invariant resonators in z^-1
        let zi = Complex64::from_polar(1.0, -w);
        let analytic: Complex64 = modes
            .iter()
            .zip(&readout.weights)
            .map(|((wt, g), weight)| {
                let decay = (-g * period).exp();
                let num = period * decay * (wt * period).sin() / wt * zi;
                let den = 1.0 - 2.0 * decay * (wt * period).cos() * zi + decay * decay * zi * zi;
                weight * num / den
            })
            .sum();
        worst_tf = worst_tf.max((dtft.norm() - analytic.norm()).abs() / analytic.norm());
    }

    // prefix scan against stepping, plucked and struck
    let spec = string_spec(Preset::StringLinear, None);
    let system = ModalSystem::for_model(&spec, &basis, None, SchemeKind::Ftm, RATE).unwrap();
    let q0 = Pluck { location: Point::on_line(0.2), amplitude: 1e-3 }.modal(&basis).unwrap();
    let struck = Excitation::PointForce {
        location: Point::on_line(0.31),
        signal: ForceSignal::RaisedCosine(RaisedCosine { amplitude: 2.0, onset: 0.01, duration: 2e-3 }),
    };
    let mut drive = ModalDrive::resolve(&struck, &basis, spec.effective_density(), RATE).unwrap();
    drive.q0 = q0;
    let steps = 10_000;
    let stepped = simulate(&system, &drive, steps, None).unwrap();
    let scanned = scan_linear(&system, &drive, steps, None).unwrap();
    let scan_err = max_diff(&stepped.modal, &scanned.modal) / max_abs(&stepped.modal);

    outcome(
        worst_tf < 1e-6 && scan_err < 1e-10,
        format!(
            "|H| relative error {worst_tf:.2e} at 64 frequencies (limit 1e-6, response tail {tail:.1e}); \
             scan vs stepping {scan_err:.2e} over {steps} steps (limit 1e-10)"
        ),
    )
}

/// Relative global errors of Störmer–Verlet at T, T/2 and T/4 against an
/// RK4 reference at T/64, over 50 ms.
fn sv_errors(preset: Preset, modes: usize) -> [f64; 3] {
    let spec = string_spec(preset, None);
    let basis = ModeBasis::string(0.65, modes).unwrap();
    let readout = basis.readout(preset.readout()).unwrap();
    let samples = samples_for(0.05, RATE);
    let system = ModalSystem::for_model(&spec, &basis, None, SchemeKind::Sv, RATE).unwrap();
    let drive = ModalDrive::resolve(&preset.excitation(), &basis, spec.effective_density(), RATE).unwrap();
    let mut reference = rk_reference(&system.bank, &system.hook, &drive, RATE, samples, 64).unwrap();
    reference.apply_readout(&readout).unwrap();
    let reference = reference.readout_signal().unwrap().to_vec();
    let scale = max_abs(&reference);
    [1usize, 2, 4].map(|factor| {
        let rate = RATE * factor as f64;
        let system = ModalSystem::for_model(&spec, &basis, None, SchemeKind::Sv, rate).unwrap();
        let drive = ModalDrive::resolve(&preset.excitation(), &basis, spec.effective_density(), rate).unwrap();
        let traj = simulate(&system, &drive, (samples - 1) * factor + 1, Some(&readout)).unwrap();
        let y = traj.readout_signal().unwrap();
        let coarse: Vec<f64> = (0..samples).map(|n| y[n * factor]).collect();
        max_diff(&coarse, &reference) / scale
    })
}

/// Measured on ten modes: with all 40 modes of the steel string the upper
/// modes (omega T up to 1) dephase by radians within the window at every
/// step size, their error saturates at their amplitude and the measured
/// slope stays near one. The 40-mode orders are printed for reference.
fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, preset) in [("linear", Preset::StringLinear), ("Kirchhoff–Carrier", Preset::StringKc)] {
        let e = sv_errors(preset, 10);
        let orders = [(e[0] / e[1]).log2(), (e[1] / e[2]).log2()];
        pass &= orders.iter().all(|p| *p >= 1.9);
        parts.push(format!(
            "{name}: errors {:.2e}/{:.2e}/{:.2e}, orders {:.3}, {:.3}",
            e[0], e[1], e[2], orders[0], orders[1]
        ));
        let full = sv_errors(preset, 40);
        println!("  {name}, 40 modes: orders {:.3}, {:.3}", (full[0] / full[1]).log2(), (full[1] / full[2]).log2());
    }
    outcome(pass, format!("10 modes, 50 ms, T = 1/44100 s; {} (limit 1.9)", parts.join("; ")))
}

/// Frequency of mode one over consecutive blocks of `periods` cycles,
/// from interpolated upward zero crossings.
fn track_fundamental(q: &[f64], rate: f64, periods: usize) -> Vec<f64> {
    let crossings: Vec<f64> = q
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < 0.0 && w[1] >= 0.0)
        .map(|(n, w)| (n as f64 + w[0] / (w[0] - w[1])) / rate)
        .collect();
    crossings.windows(periods + 1).step_by(periods).map(|c| periods as f64 / (c[periods] - c[0])).collect()
}

fn criterion_4() -> Outcome {
    let spec = string_spec(Preset::StringKc, Some(1.5));
    let norm = derive_normalized(&spec);
    let basis = ModeBasis::string(0.65, 40).unwrap();
    let unit = Pluck { location: Point::on_line(0.3), amplitude: 1.0 }.modal(&basis).unwrap();
    let stretch = |q: &[f64]| -> f64 {
        q.iter().zip(basis.eigenvalues()).zip(basis.norms_sq()).map(|((q, l), n)| l * n * q * q).sum()
    };
    // pluck sized so that tau * sum(lambda q²) / T0 = 0.08
    let amplitude = (0.08 * norm.t0_hat / (norm.tau * stretch(&unit))).sqrt();
    let q0: Vec<f64> = unit.iter().map(|q| q * amplitude).collect();
    let drive_ratio = norm.tau * stretch(&q0) / norm.t0_hat;
    let system = ModalSystem::for_model(&spec, &basis, None, SchemeKind::Sv, RATE).unwrap();
    let drive = ModalDrive::free(q0, vec![0.0; 40]).unwrap();
    let traj = simulate(&system, &drive, samples_for(3.0, RATE), None).unwrap();
    let track = track_fundamental(&traj.mode_series(0), RATE, 16);
    let f1 = string_modes_closed_form(&spec, 1)[0].0 / (2.0 * PI);
    let onset = track[0];
    let last = *track.last().unwrap();
    let rise = onset / f1 - 1.0;
    let monotone = track.windows(2).all(|w| w[1] <= w[0]);
    let settles = last - f1 < 0.1 * (onset - f1);
    outcome(
        drive_ratio >= 0.02 && rise > 0.01 && monotone && settles,
        format!(
            "pluck tau*sum(lambda q²)/T0 = {drive_ratio:.3}; onset {onset:.3} Hz vs linear {f1:.3} Hz (+{:.2}%, limit 1%); \
             {} blocks monotone: {monotone}; final {last:.3} Hz",
            100.0 * rise,
            track.len()
        ),
    )
}

fn plate_basis(modes: usize) -> ModeBasis {
    ModeBasis::for_geometry(&Geometry::RectPlate { lx: 0.2, ly: 0.3, thickness: 1e-3 }, modes).unwrap()
}

fn criterion_5() -> Outcome {
    let basis = plate_basis(10);
    let both = CouplingTensors::by_quadrature(&basis, &basis, DEFAULT_RESOLUTION).unwrap();
    let n = 10;
    let h_max = max_abs(&both.h);
    let mut symmetric = true;
    let mut identity = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                symmetric &= both.h_at(k, i, j) == both.h_at(k, j, i);
                identity = identity.max((both.h_at(k, i, j) - both.c_at(j, i, k)).abs() / h_max);
            }
        }
    }

    let fine = compute_h(&basis, &basis, 2 * DEFAULT_RESOLUTION).unwrap();
    // entries below 1e-10 of the largest are zero by symmetry
    let floor = 1e-10 * h_max;
    let refinement = both.h.iter().zip(&fine).map(|(a, b)| (a - b).abs() / b.abs().max(floor)).fold(0.0, f64::max);

    let mut contraction = 0.0f64;
    for modes in 3..=10 {
        let basis = plate_basis(modes);
        let h = compute_h(&basis, &basis, DEFAULT_RESOLUTION).unwrap();
        let c = c_from_h(&h, modes, modes);
        let zeta4: Vec<f64> = basis.eigenvalues().iter().map(|l| l * l).collect();
        let ct = CouplingTensors::from_parts(modes, modes, h, c, zeta4).unwrap();
        let (youngs, rho) = (2e11, 7800.0);
        let kappa = youngs / (2.0 * rho);
        let q: Vec<f64> = (0..modes).map(|k| 1e-4 * (1.3 * k as f64 + 0.4).sin()).collect();
        let naive: Vec<f64> = (0..modes)
            .map(|s| {
                let mut acc = 0.0;
                for p in 0..modes {
                    for m in 0..modes {
                        for a in 0..modes {
                            for b in 0..modes {
                                acc += ct.c_at(s, p, m) * ct.h_at(m, a, b) * q[p] * q[a] * q[b] / ct.zeta4[m];
                            }
                        }
                    }
                }
                kappa * acc
            })
            .collect();
        let dense = vk_nl_force(&q, &ct, youngs, rho).unwrap();
        let mut sparse = vec![0.0; modes];
        VkContraction::new(&ct, kappa).force(&q, &mut vec![0.0; modes], &mut sparse);
        let scale = max_abs(&naive);
        contraction = contraction.max(max_diff(&dense, &naive) / scale).max(max_diff(&sparse, &naive) / scale);
    }
    outcome(
        symmetric && identity <= 1e-8 && refinement <= 1e-4 && contraction <= 1e-12,
        format!(
            "H symmetric: {symmetric}; |H - C| {identity:.2e} of max (limit 1e-8); grid doubling {refinement:.2e} \
             (limit 1e-4); two-stage vs naive {contraction:.2e} for 3-10 modes (limit 1e-12)"
        ),
    )
}

struct GradCase {
    family: ModelFamily,
    params: ModalParams,
    drive: ModalDrive,
}

fn gradient_string(nonlinearity: Nonlinearity, scheme: SchemeKind, modes: usize, amplitude: f64) -> GradCase {
    let spec = ModelSpec {
        material: modal_core::model::MaterialParams { rho: 1.0, youngs: 0.0, poisson: 0.0, d1: 2.0, d3: 1e-4 },
        geometry: Geometry::String { length: 1.0, area: 1.0 },
        tension: 160_000.0,
        stiffness: Some(5.0),
        nonlinearity,
        density_convention: None,
    };
    let spec = validated(&spec).unwrap();
    let basis = ModeBasis::string(1.0, modes).unwrap();
    let weights = basis.readout(Point::on_line(0.31)).unwrap().weights;
    let (family, mut params) = ModelFamily::from_model(&spec, &basis, None, scheme, RATE, weights).unwrap();
    if nonlinearity == Nonlinearity::TensionModulated {
        params.tau = 2e9;
    }
    if scheme == SchemeKind::Ftm {
        params.b2 = (0..modes).map(|k| [2e-11, -1e-11, 5e-12, 3e-12][k % 4]).collect();
    }
    let q0 = Pluck { location: Point::on_line(0.23), amplitude }.modal(&basis).unwrap();
    // displacement, velocity and force all carry signal
    let v0 = q0.iter().enumerate().map(|(k, q)| 300.0 * q * (k as f64 + 1.0)).collect();
    let shape = (0..modes).map(|k| 1.0 / (k as f64 + 1.0)).collect();
    let signal = (0..200).map(|n| (n as f64 * 0.05).sin() * 40.0).collect();
    GradCase { family, params, drive: ModalDrive { q0, v0, shape, signal } }
}

fn gradient_plate(scheme: SchemeKind, modes: usize) -> GradCase {
    let spec = Preset::PlateVk.spec();
    let spec = validated(&ModelSpec { material: modal_core::model::MaterialParams { d1: 1.5, ..spec.material }, ..spec })
        .unwrap();
    let basis = plate_basis(modes);
    let ct = CouplingTensors::simply_supported(&basis, &basis, DEFAULT_RESOLUTION).unwrap();
    let weights = basis.readout(Point::new(0.05, 0.07)).unwrap().weights;
    let (family, params) = ModelFamily::from_model(&spec, &basis, Some(&ct), scheme, RATE, weights).unwrap();
    let q0 = Pluck { location: Point::new(0.07, 0.11), amplitude: 8e-4 }.modal(&basis).unwrap();
    GradCase { family, params, drive: ModalDrive::free(q0, vec![0.0; modes]).unwrap() }
}

/// Target from a perturbed copy of the case parameters.
fn gradient_objective(case: &GradCase, samples: usize, factor: f64) -> TimeDomainObjective {
    let stft = StftConfig { window_len: 256, hop: 64, window: WindowKind::Hann };
    let weights = LossWeights { alpha: 0.0, beta: 1.0, eta: 0.0, epsilon: 1e-8 };
    let probe = TimeDomainObjective::new(case.family.clone(), case.drive.clone(), &vec![0.0; samples], stft, weights)
        .unwrap();
    let signal = probe.synthesize(&perturbed(&case.params, factor), samples).unwrap();
    TimeDomainObjective::new(case.family.clone(), case.drive.clone(), &signal, stft, weights).unwrap()
}

fn perturbed(p: &ModalParams, factor: f64) -> ModalParams {
    let mut t = p.clone();
    t.d_hat *= factor;
    t.t0_hat *= factor.sqrt();
    t.tau *= factor;
    for (k, g) in t.gamma.iter_mut().enumerate() {
        *g *= 1.0 + 0.2 * (k as f64 + 1.0) * (factor - 1.0);
    }
    for (k, w) in t.weights.iter_mut().enumerate() {
        *w *= 1.0 + 0.3 * (-1f64).powi(k as i32) * (factor - 1.0);
    }
    for (k, h) in t.h.iter_mut().enumerate() {
        *h *= 1.0 + 0.1 * ((k % 5) as f64 - 2.0) * (factor - 1.0);
    }
    t
}

fn linear_kinds(modes: usize, scheme: SchemeKind) -> Vec<ParamKind> {
    let mut kinds = vec![ParamKind::StiffnessHat, ParamKind::TensionHat];
    kinds.extend(ParamKind::all_gamma(modes));
    if scheme == SchemeKind::Ftm {
        kinds.extend(ParamKind::all_b2(modes));
    }
    kinds.extend(ParamKind::all_weights(modes));
    kinds
}

fn nonzero_coupling(case: &GradCase, modes: usize) -> Vec<ParamKind> {
    ParamKind::all_coupling(modes, modes).into_iter().filter(|k| case.params.get(*k) != 0.0).collect()
}

fn criterion_6() -> Outcome {
    let started = Instant::now();
    // (label, objective, params, free parameters, tolerance)
    let mut runs: Vec<(String, Box<dyn Objective>, ModalParams, Vec<ParamKind>, f64)> = Vec::new();
    for scheme in [SchemeKind::Ftm, SchemeKind::Sv] {
        let case = gradient_string(Nonlinearity::Linear, scheme, 4, 1e-3);
        let obj = gradient_objective(&case, 3000, 1.02);
        runs.push((format!("linear string {scheme:?}"), Box::new(obj), case.params.clone(), linear_kinds(4, scheme), 1e-4));

        let case = gradient_string(Nonlinearity::TensionModulated, scheme, 4, 2e-3);
        let obj = gradient_objective(&case, 2000, 1.03);
        let mut kinds = linear_kinds(4, scheme);
        kinds.push(ParamKind::Tau);
        runs.push((format!("tension string {scheme:?}"), Box::new(obj), case.params.clone(), kinds, 1e-4));

        let case = gradient_plate(scheme, 3);
        let obj = gradient_objective(&case, 500, 1.1);
        let mut kinds = vec![ParamKind::StiffnessHat];
        kinds.extend(ParamKind::all_gamma(3));
        kinds.extend(nonzero_coupling(&case, 3));
        runs.push((format!("plate coupling {scheme:?}"), Box::new(obj), case.params.clone(), kinds, 1e-4));
    }
    let case = gradient_plate(SchemeKind::Ftm, 4);
    let obj = gradient_objective(&case, 12_000, 1.05);
    let mut kinds = vec![ParamKind::StiffnessHat, ParamKind::Gamma(0), ParamKind::Weight(1)];
    kinds.extend(nonzero_coupling(&case, 4).into_iter().take(4));
    runs.push(("plate 12000-step chain".into(), Box::new(obj), case.params.clone(), kinds, 1e-3));

    let case = gradient_string(Nonlinearity::Linear, SchemeKind::Ftm, 5, 1e-3);
    let freqs = bark_grid(96, 8000.0, RATE).unwrap();
    let probe =
        FrequencyDomainObjective::new(case.family.clone(), Envelope::new(freqs.clone(), vec![1.0; 96]).unwrap(), LossWeights::default())
            .unwrap();
    let mags = probe.magnitude(&perturbed(&case.params, 1.04)).unwrap();
    let obj = FrequencyDomainObjective::new(case.family.clone(), Envelope::new(freqs, mags).unwrap(), LossWeights::default())
        .unwrap();
    runs.push(("envelope".into(), Box::new(obj), case.params.clone(), linear_kinds(5, SchemeKind::Ftm), 1e-4));

    let mut pass = true;
    let mut by_group: Vec<(&'static str, f64)> = Vec::new();
    let mut failures = Vec::new();
    for (label, obj, params, kinds, tol) in &runs {
        let free = ParamVector::new(kinds.clone(), obj.family(), params).unwrap();
        let report = GradientReport::converged(obj.as_ref(), params, &free).unwrap();
        for e in &report.entries {
            if e.relative_error >= *tol {
                pass = false;
                failures.push(format!("{label} {:?} {:.2e}", e.param, e.relative_error));
            }
            let group = e.param.group();
            match by_group.iter_mut().find(|(g, _)| *g == group) {
                Some((_, worst)) => *worst = worst.max(e.relative_error),
                None => by_group.push((group, e.relative_error)),
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let groups: Vec<String> = by_group.iter().map(|(g, e)| format!("{g} {e:.1e}")).collect();
    if !failures.is_empty() {
        println!("  over tolerance: {}", failures.join(", "));
    }
    outcome(
        pass && elapsed < 120.0,
        format!(
            "worst relative error per kind: {} (limit 1e-4, 1e-3 for the 12000-step chain); suite {elapsed:.1} s (limit 120)",
            groups.join(", ")
        ),
    )
}

/// Synthetic von Kármán plate target struck at `force` newtons.
fn plate_target(modes: usize, seconds: f64, force: f64, weights: LossWeights) -> (TimeDomainObjective, ModalParams) {
    let preset = Preset::PlateVk;
    let spec = validated(&preset.spec()).unwrap();
    let basis = plate_basis(modes);
    let ct = CouplingTensors::simply_supported(&basis, &basis, DEFAULT_RESOLUTION).unwrap();
    let readout = basis.readout(preset.readout()).unwrap().weights;
    let (family, params) = ModelFamily::from_model(&spec, &basis, Some(&ct), SchemeKind::Sv, RATE, readout).unwrap();
    let Excitation::PointForce { location, .. } = preset.excitation() else { panic!("plate preset is struck") };
    let strike = Excitation::PointForce {
        location,
        signal: ForceSignal::RaisedCosine(RaisedCosine { amplitude: force, onset: 0.0, duration: 1e-3 }),
    };
    let drive = ModalDrive::resolve(&strike, &basis, spec.effective_density(), RATE).unwrap();
    let samples = samples_for(seconds, RATE);
    let stft = StftConfig { window_len: 1024, hop: 256, window: WindowKind::Hann };
    let probe = TimeDomainObjective::new(family.clone(), drive.clone(), &vec![0.0; samples], stft, weights).unwrap();
    let signal = probe.synthesize(&params, samples).unwrap();
    (TimeDomainObjective::new(family, drive, &signal, stft, weights).unwrap(), params)
}

/// Spectral-convergence and transport terms only.
fn shape_weights() -> LossWeights {
    LossWeights { alpha: 0.0, beta: 1.0, eta: 1.0, epsilon: 1e-8 }
}

fn criterion_7() -> Outcome {
    let (obj, target) = plate_target(10, 0.1, 100.0, shape_weights());
    let mut init = target.clone();
    init.d_hat = 10.0;
    let free = ParamVector::new(vec![ParamKind::StiffnessHat], obj.family(), &init).unwrap();
    let cfg = FitConfig { steps: 1000, peak_lr: 0.1, starts: 1, ..FitConfig::default() };
    let res = fit(&obj, &init, &free, &cfg).unwrap();
    let err = (res.best.d_hat - PLATE_VK_D_HAT).abs();
    outcome(
        err <= 1e-3,
        format!(
            "recovered D = {:.5} from 10 (target {PLATE_VK_D_HAT}, error {err:.1e}, limit 1e-3) over {} samples",
            res.best.d_hat,
            obj.samples()
        ),
    )
}

/// Mean absolute dB difference over frames `[lo, hi)`, with a floor at
/// -60 dB of the reference peak.
fn db_error(reference: &Spectrogram, other: &Spectrogram, lo: usize, hi: usize) -> f64 {
    let floor = 1e-3 * max_abs(&reference.mags);
    let mut acc = 0.0;
    let mut count = 0usize;
    for f in lo..hi {
        for (a, b) in reference.frame(f).iter().zip(other.frame(f)) {
            acc += (20.0 * ((a + floor) / (b + floor)).log10()).abs();
            count += 1;
        }
    }
    acc / count as f64
}

fn criterion_8() -> Outcome {
    let modes = 4;
    let (obj, target) = plate_target(modes, 0.4, 60.0, shape_weights());
    let free = ParamVector::new(ParamKind::all_coupling(modes, modes), obj.family(), &target).unwrap();
    let cfg = FitConfig { steps: 600, peak_lr: 0.1, starts: 1, seed: 7, first_start_from_initial: false, ..FitConfig::default() };
    let res = fit(&obj, &target, &free, &cfg).unwrap();
    let start = &res.starts[0];
    let ratio = start.final_loss / start.trace[0];

    let n = obj.samples();
    let reference = stft(&obj.synthesize(&target, 2 * n).unwrap(), RATE, StftConfig::default()).unwrap();
    let fitted = stft(&obj.synthesize(&res.best, 2 * n).unwrap(), RATE, StftConfig::default()).unwrap();
    let half = reference.frames / 2;
    let fit_db = db_error(&reference, &fitted, 0, half);
    let ext_db = db_error(&reference, &fitted, half, reference.frames);
    outcome(
        n == 17_640 && ratio < 0.01 && ext_db < fit_db + 3.0,
        format!(
            "{} free entries over {n} steps: final/initial loss {ratio:.2e} (limit 1e-2); log-magnitude error \
             {fit_db:.3} dB fitted, {ext_db:.3} dB extension (limit fitted + 3 dB)",
            free.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let (frames, bins) = (6, 64);
    let bin_hz = RATE / 1024.0;
    let freqs: Vec<f64> = (0..bins).map(|j| j as f64 * bin_hz).collect();
    let layout = Layout { frames, bins, freqs: &freqs };
    let spectrum = |seed: f64| -> Vec<f64> {
        (0..frames * bins).map(|i| ((i as f64 * 0.37 + seed).sin() * 43_758.545).fract().abs() + 0.01).collect()
    };
    let mut nonneg = true;
    let mut identity = true;
    for seed in 0..20 {
        let (y, p) = (spectrum(seed as f64), spectrum(seed as f64 + 100.0));
        nonneg &= loss_log(&y, &p, 1e-8).unwrap() >= 0.0
            && loss_sc(&y, &p).unwrap() >= 0.0
            && loss_sot(&y, &p, layout).unwrap().0 >= 0.0;
        identity &= loss_log(&y, &y, 1e-8).unwrap() == 0.0
            && loss_sc(&y, &y).unwrap() == 0.0
            && loss_sot(&y, &y, layout).unwrap().0 == 0.0;
    }

    let single = Layout { frames: 1, bins, freqs: &freqs };
    let mut shift_exact = true;
    for k in 1..20 {
        let mut y = vec![0.0; bins];
        let mut p = vec![0.0; bins];
        y[10] = 1.0;
        p[10 + k] = 1.0;
        shift_exact &= loss_sot(&y, &p, single).unwrap().0 == k as f64 * bin_hz;
    }

    let y = spectrum(3.0);
    let doubled: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    let sc = loss_sc(&y, &doubled).unwrap();
    outcome(
        nonneg && identity && shift_exact && sc == 1.0,
        format!("non-negative: {nonneg}; zero at identity: {identity}; transport shift = k df exactly: {shift_exact}; sc(Y, 2Y) = {sc}"),
    )
}

fn criterion_10() -> Outcome {
    let settings = BenchSettings { duration: 0.01, ..BenchSettings::default() };
    let report = run_benchmark(&settings).unwrap();
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let samples_csv = report.samples_csv();
    std::fs::write(dir.join("bench_samples.csv"), &samples_csv).unwrap();
    std::fs::write(dir.join("bench_summary.csv"), report.summary_csv()).unwrap();

    let counts = &settings.mode_counts;
    let complete = report.cases.len() == 6
        && report.cases.iter().all(|c| c.samples.len() == 50)
        && samples_csv.lines().count() == 1 + 6 * 50;
    let mut increasing = true;
    let mut medians = Vec::new();
    for model in [BenchModel::VonKarman, BenchModel::Berger] {
        let m: Vec<f64> = counts.iter().map(|n| report.case(model, *n).unwrap().median).collect();
        increasing &= m.windows(2).all(|w| w[1] > w[0]);
        medians.push(format!("{} {:.2e}/{:.2e}/{:.2e} s", model.name(), m[0], m[1], m[2]));
    }
    let per_step = |n| report.case(BenchModel::VonKarman, n).unwrap().median_per_step;
    let growth = per_step(100) / per_step(10);
    outcome(
        complete && increasing && growth > 10.0,
        format!(
            "medians {} for 10/50/100 modes, strictly increasing: {increasing}; von Kármán per-step cost x{growth:.0} \
             from 10 to 100 modes (limit > 10); samples in {}",
            medians.join(", "),
            dir.join("bench_samples.csv").display()
        ),
    )
}
