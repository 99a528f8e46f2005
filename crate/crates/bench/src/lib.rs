//! Wall-clock benchmark of the stepping loop for the nonlinear plate
//! models at several mode counts.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use modal_coupling::{CouplingTensors, DEFAULT_RESOLUTION};
use modal_core::error::{Error, Result};
use modal_integrators::{samples_for, ModalDrive, ModalSystem, SchemeKind, SimState, Stepper};
use modal_core::model::validated;
use modal_core::modes::ModeBasis;
use modal_presets::Preset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchModel {
    VonKarman,
    /// Tension-modulated stiff membrane.
    Berger,
}

impl BenchModel {
    pub fn name(self) -> &'static str {
        match self {
            BenchModel::VonKarman => "von-karman",
            BenchModel::Berger => "berger",
        }
    }

    fn preset(self) -> Preset {
        match self {
            BenchModel::VonKarman => Preset::PlateVk,
            BenchModel::Berger => Preset::MembraneBerger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSettings {
    pub models: Vec<BenchModel>,
    pub mode_counts: Vec<usize>,
    pub repetitions: usize,
    /// Untimed runs before the timed ones.
    pub warmups: usize,
    /// Simulated seconds per run.
    pub duration: f64,
    pub sample_rate: f64,
    pub scheme: SchemeKind,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            models: vec![BenchModel::VonKarman, BenchModel::Berger],
            mode_counts: vec![10, 50, 100],
            repetitions: 50,
            warmups: 3,
            duration: 1.0,
            sample_rate: 44_100.0,
            scheme: SchemeKind::Sv,
        }
    }
}

impl BenchSettings {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::arg("benchmarks need at least one repetition"));
        }
        if self.models.is_empty() || self.mode_counts.is_empty() || self.mode_counts.contains(&0) {
            return Err(Error::arg("benchmarks need models and positive mode counts"));
        }
        if !(self.duration > 0.0 && self.sample_rate > 0.0) || samples_for(self.duration, self.sample_rate) < 2 {
            return Err(Error::arg("benchmark duration must cover at least two samples"));
        }
        Ok(())
    }
}

/// Timings of one (model, mode count) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCase {
    pub model: BenchModel,
    pub modes: usize,
    pub steps: usize,
    pub simulated_seconds: f64,
    /// Wall seconds per timed repetition.
    pub samples: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    /// Median wall time over simulated time.
    pub real_time_ratio: f64,
    /// Faster than real time.
    pub real_time: bool,
    pub median_per_step: f64,
}

impl BenchCase {
    fn from_samples(model: BenchModel, modes: usize, steps: usize, simulated_seconds: f64, samples: Vec<f64>) -> Self {
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let median = quantile(&sorted, 0.5);
        let ratio = median / simulated_seconds;
        Self {
            model,
            modes,
            steps,
            simulated_seconds,
            median,
            q1: quantile(&sorted, 0.25),
            q3: quantile(&sorted, 0.75),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            real_time_ratio: ratio,
            real_time: ratio < 1.0,
            median_per_step: median / steps as f64,
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub settings: BenchSettings,
    pub cases: Vec<BenchCase>,
}

impl BenchReport {
    pub fn case(&self, model: BenchModel, modes: usize) -> Option<&BenchCase> {
        self.cases.iter().find(|c| c.model == model && c.modes == modes)
    }

    /// One row per timed repetition, ready for box plots.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("model,modes,repetition,seconds\n");
        for c in &self.cases {
            for (i, s) in c.samples.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{:e}", c.model.name(), c.modes, i, s);
            }
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("model,modes,steps,median,q1,q3,min,max,real_time_ratio,real_time\n");
        for c in &self.cases {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                c.model.name(),
                c.modes,
                c.steps,
                c.median,
                c.q1,
                c.q3,
                c.min,
                c.max,
                c.real_time_ratio,
                c.real_time
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Builds the system and excitation for one configuration; not timed.
pub fn bench_system(model: BenchModel, modes: usize, scheme: SchemeKind, sample_rate: f64) -> Result<(ModalSystem, ModalDrive)> {
    let preset = model.preset();
    let spec = validated(&preset.spec())?;
    let basis = ModeBasis::for_geometry(&spec.geometry, modes)?;
    let tensors = match model {
        BenchModel::VonKarman => {
            let mut t = CouplingTensors::simply_supported(&basis, &basis, DEFAULT_RESOLUTION)?;
            t.sparsify(modal_coupling::SPARSITY_THRESHOLD);
            Some(t)
        }
        BenchModel::Berger => None,
    };
    let system = ModalSystem::for_model(&spec, &basis, tensors.as_ref(), scheme, sample_rate)?;
    let drive = ModalDrive::resolve(&preset.excitation(), &basis, spec.effective_density(), sample_rate)?;
    Ok((system, drive))
}

/// Runs the stepping loop once and returns the final readout-free state sum
/// so the work cannot be optimised away.
pub fn run_steps(system: &ModalSystem, drive: &ModalDrive, steps: usize) -> Result<f64> {
    let m = system.modes();
    let mut state = SimState::from_initial(&drive.q0, &drive.v0, &system.bank, system.coeffs.period(), &system.hook);
    let mut stepper = Stepper::new(&system.coeffs, &system.hook);
    let mut force = vec![0.0; m];
    for n in 0..steps.saturating_sub(1) {
        drive.force_at(n, &mut force);
        stepper.step(&mut state, &force)?;
    }
    Ok(state.q_curr.iter().sum())
}

/// Times every configuration sequentially. Repetitions are never run
/// concurrently so they do not compete for cores.
pub fn run_benchmark(settings: &BenchSettings) -> Result<BenchReport> {
    settings.validate()?;
    let steps = samples_for(settings.duration, settings.sample_rate);
    let simulated = steps as f64 / settings.sample_rate;
    let mut cases = Vec::new();
    for &model in &settings.models {
        for &modes in &settings.mode_counts {
            let (system, drive) = bench_system(model, modes, settings.scheme, settings.sample_rate)?;
            for _ in 0..settings.warmups {
                black_box(run_steps(&system, &drive, steps)?);
            }
            let mut samples = Vec::with_capacity(settings.repetitions);
            for _ in 0..settings.repetitions {
                let start = Instant::now();
                black_box(run_steps(black_box(&system), &drive, steps)?);
                samples.push(start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE));
            }
            let case = BenchCase::from_samples(model, modes, steps, simulated, samples);
            log::info!(
                "{} {} modes: median {:.4e} s ({:.3}x real time)",
                model.name(),
                modes,
                case.median,
                case.real_time_ratio
            );
            cases.push(case);
        }
    }
    Ok(BenchReport { settings: settings.clone(), cases })
}
