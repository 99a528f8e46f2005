//! The four subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use modal_analysis::{bark_grid, lpc, lpc_envelope_at, wav_read, wav_write_scaled, Envelope, DEFAULT_LPC_ORDER};
use modal_bench::run_benchmark;
use modal_fitting::{
    fit_frequency_domain, fit_time_domain, FitConfig, FitDomain, FitResult, FrequencyDomainObjective, InitRanges, ModalParams,
    ModelFamily, ParamKind, ParamVector, TimeDomainObjective,
};
use modal_integrators::{
    oscillator_bank, rk_reference, samples_for, scan_linear, simulate, ModalDrive, ModalSystem, SchemeKind,
};
use modal_core::model::Nonlinearity;
use serde::Serialize;

use crate::config::{FitSection, Resolved, RunConfig, RunScheme};
use crate::error::{CliError, CliResult};
use crate::manifest::OutputDir;

/// Random starts spread over this factor around the configured model when no
/// init ranges are given.
const DEFAULT_INIT_SPREAD: f64 = 2.0;

/// Writes `readout.wav`, `modal.csv` and the manifest.
pub fn cmd_simulate(r: &Resolved, out: &Path) -> CliResult<PathBuf> {
    let basis = r.basis()?;
    let tensors = r.tensors(&basis)?;
    let rate = r.sample_rate();
    let samples = samples_for(r.duration(), rate);
    let drive = ModalDrive::resolve(r.excitation(), &basis, r.spec.effective_density(), rate)?;
    let readout = basis.readout(r.readout())?;
    let traj = match r.scheme() {
        RunScheme::Ftm | RunScheme::Sv => {
            let kind = r.scheme().stepping().unwrap_or(SchemeKind::Sv);
            let system = ModalSystem::for_model(&r.spec, &basis, tensors.as_ref(), kind, rate)?;
            simulate(&system, &drive, samples, Some(&readout))?
        }
        RunScheme::Scan => {
            let system = ModalSystem::for_model(&r.spec, &basis, None, SchemeKind::Ftm, rate)?;
            scan_linear(&system, &drive, samples, Some(&readout))?
        }
        RunScheme::RkReference => {
            let system = ModalSystem::for_model(&r.spec, &basis, tensors.as_ref(), SchemeKind::Sv, rate)?;
            let mut traj =
                rk_reference(&system.bank, &system.hook, &drive, rate, samples, r.echo.oversample.unwrap_or(16))?;
            traj.apply_readout(&readout)?;
            traj
        }
    };
    let mut dir = OutputDir::create(out)?;
    let wav = dir.file("readout.wav");
    wav_write_scaled(&wav, &traj.readout_signal()?, rate.round() as u32, r.echo.normalise_wav.unwrap_or(false))?;
    dir.write("modal.csv", &traj.to_csv())?;
    log::info!("simulated {samples} samples with {} modes", basis.len());
    dir.finish("simulate", r.echo.clone())
}

/// Mode table sorted by damped frequency, plus an optional shape dump.
pub fn cmd_modes(r: &Resolved, out: &Path) -> CliResult<PathBuf> {
    let basis = r.basis()?;
    let bank = oscillator_bank(&r.spec, &basis);
    let freqs = bank.frequencies_hz();
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| freqs[a].total_cmp(&freqs[b]).then(a.cmp(&b)));
    let mut table = String::from("index,label,lambda,f_hz,gamma,underdamped\n");
    for k in order {
        let _ = writeln!(
            table,
            "{k},{},{:e},{:e},{:e},{}",
            basis.labels()[k],
            basis.eigenvalues()[k],
            freqs[k],
            bank.gamma[k],
            bank.is_underdamped(k)
        );
    }
    let mut dir = OutputDir::create(out)?;
    dir.write("modes.csv", &table)?;
    print!("{table}");
    if let Some(n) = r.echo.shape_grid {
        if n < 2 {
            return Err(CliError::Config("shape_grid needs at least 2 points per axis".into()));
        }
        let grid = basis.grid(n);
        let mut shapes = String::from("x,y");
        for k in 0..basis.len() {
            let _ = write!(shapes, ",mode{k}");
        }
        shapes.push('\n');
        for idx in 0..grid.len() {
            let p = grid.point(idx);
            let _ = write!(shapes, "{:e},{:e}", p.x, p.y);
            for k in 0..basis.len() {
                let _ = write!(shapes, ",{:e}", basis.shape(k, p));
            }
            shapes.push('\n');
        }
        dir.write("mode_shapes.csv", &shapes)?;
    }
    dir.finish("modes", r.echo.clone())
}

/// Box-plot samples, a summary table and the JSON report.
pub fn cmd_benchmark(config: Option<RunConfig>, out: &Path) -> CliResult<PathBuf> {
    let settings = config.as_ref().and_then(|c| c.bench.clone()).unwrap_or_default();
    let report = run_benchmark(&settings)?;
    let mut dir = OutputDir::create(out)?;
    dir.write("bench.json", &report.to_json()?)?;
    dir.write("bench_samples.csv", &report.samples_csv())?;
    dir.write("bench_summary.csv", &report.summary_csv())?;
    print!("{}", report.summary_csv());
    let echo = RunConfig { bench: Some(settings), ..config.unwrap_or_default() };
    dir.finish("benchmark", echo)
}

#[derive(Serialize)]
struct FitOutput<'a> {
    best_values: BTreeMap<String, f64>,
    result: &'a FitResult,
}

/// Fits the configured model to a WAV recording or an envelope CSV.
pub fn cmd_fit(r: &Resolved, target_flag: Option<PathBuf>, out: &Path) -> CliResult<PathBuf> {
    let mut section = r.echo.fit.clone().unwrap_or_default();
    let target = target_flag
        .or_else(|| section.target.clone())
        .ok_or_else(|| CliError::Config("fit needs a target (--target or fit.target)".into()))?;
    let kind = r
        .scheme()
        .stepping()
        .ok_or_else(|| CliError::Incompatible("fitting needs the ftm, sv or scan scheme".into()))?;
    let rate = r.sample_rate();
    let basis = r.basis()?;
    let tensors = r.tensors(&basis)?;
    let weights = basis.readout(r.readout())?.weights;
    let (family, initial) = ModelFamily::from_model(&r.spec, &basis, tensors.as_ref(), kind, rate, weights)?;
    let is_envelope = target.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let domain = section.domain.unwrap_or(if is_envelope { FitDomain::Frequency } else { FitDomain::Time });
    let mut cfg = fit_config(r, &section, domain);
    if section.init.is_none() && cfg.starts > 1 {
        cfg.init = InitRanges::around(&initial, DEFAULT_INIT_SPREAD);
    }
    if section.free.is_empty() {
        section.free = default_free(r.spec.nonlinearity, &initial);
    }
    let mut kinds = Vec::new();
    for sel in &section.free {
        kinds.extend(ParamKind::select(sel, &family)?);
    }
    let free = ParamVector::new(kinds, &family, &initial)?;

    let mut dir = OutputDir::create(out)?;
    let (result, resynth) = match domain {
        FitDomain::Frequency => {
            let envelope = if is_envelope {
                Envelope::read_csv(&target)?
            } else {
                let (signal, wav_rate) = wav_read(&target)?;
                check_rate(wav_rate, rate)?;
                let order = section.lpc_order.unwrap_or(DEFAULT_LPC_ORDER);
                let model = lpc(&signal, order)?;
                let f_max = section.f_max.unwrap_or(0.45 * rate);
                let freqs = bark_grid(section.bark_points.unwrap_or(128), f_max, rate)?;
                let mags = lpc_envelope_at(&model, &freqs, rate)?;
                Envelope::new(freqs, mags)?
            };
            dir.write("target_envelope.csv", &envelope.to_csv())?;
            let objective = FrequencyDomainObjective::new(family.clone(), envelope.clone(), cfg.loss)?;
            let result = fit_frequency_domain(&objective, &initial, &free, &cfg)?;
            let fitted = Envelope::new(envelope.freqs.clone(), objective.magnitude(&result.best)?)?;
            dir.write("fitted_envelope.csv", &fitted.to_csv())?;
            let samples = samples_for(r.duration(), rate);
            let system = result.best.system(&family)?;
            let traj = simulate(&system, &ModalDrive::impulse(family.modes()), samples, None)?;
            let signal = traj.modal.chunks(family.modes()).map(|q| dot(q, &result.best.weights)).collect();
            (result, signal)
        }
        FitDomain::Time => {
            if is_envelope {
                return Err(CliError::Incompatible("time-domain fits need a WAV target".into()));
            }
            let (mut signal, wav_rate) = wav_read(&target)?;
            check_rate(wav_rate, rate)?;
            if let Some(seg) = section.segment {
                signal.truncate(samples_for(seg, rate).max(1));
            }
            let drive = ModalDrive::resolve(r.excitation(), &basis, r.spec.effective_density(), rate)?;
            let objective = TimeDomainObjective::new(family.clone(), drive, &signal, cfg.stft, cfg.loss)?;
            let result = fit_time_domain(&objective, &initial, &free, &cfg)?;
            let resynth = objective.synthesize(&result.best, signal.len())?;
            (result, resynth)
        }
    };
    log::info!("best loss {:.6e} from start {}", result.best_loss, result.best_start);
    let best_values = result.best_values().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let json = serde_json::to_string_pretty(&FitOutput { best_values, result: &result })
        .map_err(|e| CliError::Config(e.to_string()))?;
    dir.write("fit.json", &json)?;
    dir.write("traces.csv", &traces_csv(&result))?;
    let wav = dir.file("resynth.wav");
    wav_write_scaled(&wav, &resynth, rate.round() as u32, r.echo.normalise_wav.unwrap_or(false))?;

    let mut echo = r.echo.clone();
    echo.fit = Some(FitSection {
        target: Some(target),
        domain: Some(domain),
        steps: Some(cfg.steps),
        starts: Some(cfg.starts),
        peak_lr: Some(cfg.peak_lr),
        schedule: Some(cfg.schedule),
        tolerance: Some(cfg.tolerance),
        first_start_from_initial: Some(cfg.first_start_from_initial),
        init: Some(cfg.init.clone()),
        loss: Some(cfg.loss),
        stft: Some(cfg.stft),
        ..section
    });
    dir.finish("fit", echo)
}

fn fit_config(r: &Resolved, s: &FitSection, domain: FitDomain) -> FitConfig {
    let mut cfg = match r.echo.preset {
        Some(p) => p.fit_config(),
        None if r.spec.nonlinearity == Nonlinearity::Linear => FitConfig::linear_default(),
        None => FitConfig::nonlinear_default(),
    };
    cfg.domain = domain;
    cfg.seed = r.seed();
    if let Some(v) = s.steps {
        cfg.steps = v;
    }
    if let Some(v) = s.starts {
        cfg.starts = v;
    }
    if let Some(v) = s.peak_lr {
        cfg.peak_lr = v;
    }
    if let Some(v) = s.schedule {
        cfg.schedule = v;
    }
    if let Some(v) = s.tolerance {
        cfg.tolerance = v;
    }
    if let Some(v) = s.first_start_from_initial {
        cfg.first_start_from_initial = v;
    }
    if let Some(v) = &s.init {
        cfg.init = v.clone();
    }
    if let Some(v) = s.loss {
        cfg.loss = v;
    }
    if let Some(v) = s.stft {
        cfg.stft = v;
    }
    cfg
}

/// Stiffness and tension (when present) plus the model's own extras.
fn default_free(nonlinearity: Nonlinearity, initial: &ModalParams) -> Vec<String> {
    let mut free = Vec::new();
    if initial.d_hat > 0.0 {
        free.push("d_hat".to_string());
    }
    if initial.t0_hat > 0.0 && nonlinearity != Nonlinearity::VonKarman {
        free.push("t0_hat".to_string());
    }
    match nonlinearity {
        Nonlinearity::Linear => free.push("gamma".into()),
        Nonlinearity::TensionModulated if initial.tau > 0.0 => free.push("tau".into()),
        _ => {}
    }
    free
}

fn check_rate(wav_rate: u32, rate: f64) -> CliResult<()> {
    if (wav_rate as f64 - rate).abs() > 1e-9 {
        return Err(CliError::Incompatible(format!(
            "target sample rate {wav_rate} Hz differs from the simulation rate {rate} Hz"
        )));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn traces_csv(result: &FitResult) -> String {
    let mut out = String::from("start,step,loss\n");
    for s in &result.starts {
        for (step, loss) in s.trace.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:e}", s.index, step, loss);
        }
    }
    out
}
