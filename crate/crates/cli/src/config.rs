//! JSON run configuration and its resolution against a preset.

use std::path::{Path, PathBuf};

use modal_analysis::StftConfig;
use modal_bench::BenchSettings;
use modal_coupling::{CouplingTensors, DEFAULT_RESOLUTION, SPARSITY_THRESHOLD};
use modal_fitting::{FitDomain, InitRanges, LossWeights, Schedule};
use modal_integrators::{Excitation, SchemeKind};
use modal_core::model::{validated, ModelSpec, Nonlinearity, ValidatedSpec};
use modal_core::modes::{ModeBasis, Point};
use modal_presets::Preset;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunScheme {
    Ftm,
    Sv,
    /// Parallel prefix scan; linear models only.
    Scan,
    /// Oversampled RK4 reference.
    RkReference,
}

impl RunScheme {
    /// Scheme used when a stepping scheme is needed (fitting).
    pub fn stepping(self) -> Option<SchemeKind> {
        match self {
            RunScheme::Ftm | RunScheme::Scan => Some(SchemeKind::Ftm),
            RunScheme::Sv => Some(SchemeKind::Sv),
            RunScheme::RkReference => None,
        }
    }
}

impl From<SchemeKind> for RunScheme {
    fn from(k: SchemeKind) -> Self {
        match k {
            SchemeKind::Ftm => RunScheme::Ftm,
            SchemeKind::Sv => RunScheme::Sv,
        }
    }
}

/// Fitting options. Unset fields fall back to the preset or to the
/// linear/nonlinear defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// WAV recording or two-column envelope CSV.
    pub target: Option<PathBuf>,
    /// Parameter selectors such as `d_hat`, `gamma` or `h[0][1][2]`.
    pub free: Vec<String>,
    pub domain: Option<FitDomain>,
    pub steps: Option<usize>,
    pub starts: Option<usize>,
    pub peak_lr: Option<f64>,
    pub schedule: Option<Schedule>,
    pub tolerance: Option<f64>,
    pub first_start_from_initial: Option<bool>,
    pub init: Option<InitRanges>,
    pub loss: Option<LossWeights>,
    pub stft: Option<StftConfig>,
    /// Seconds of the target used by time-domain fits.
    pub segment: Option<f64>,
    pub lpc_order: Option<usize>,
    pub bark_points: Option<usize>,
    pub f_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub model: Option<ModelSpec>,
    /// Transverse mode count.
    pub modes: Option<usize>,
    /// In-plane mode count for von Kármán plates; defaults to `modes`.
    pub airy_modes: Option<usize>,
    pub coupling_resolution: Option<usize>,
    pub scheme: Option<RunScheme>,
    pub excitation: Option<Excitation>,
    pub readout: Option<Point>,
    pub duration: Option<f64>,
    pub sample_rate: Option<f64>,
    pub oversample: Option<usize>,
    pub seed: Option<u64>,
    pub normalise_wav: Option<bool>,
    /// Points per axis of an optional mode-shape dump (`modes` command).
    pub shape_grid: Option<usize>,
    pub fit: Option<FitSection>,
    pub bench: Option<BenchSettings>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fills unset fields from the preset (the flag wins over the file).
    pub fn resolve(mut self, preset_flag: Option<Preset>, seed_flag: Option<u64>) -> CliResult<Resolved> {
        if preset_flag.is_some() {
            self.preset = preset_flag;
        }
        if seed_flag.is_some() {
            self.seed = seed_flag;
        }
        let preset = self.preset;
        let model = match (self.model.take(), preset) {
            (Some(m), _) => m,
            (None, Some(p)) => p.spec(),
            (None, None) => return Err(CliError::Config("either `model` or a preset is required".into())),
        };
        let spec = validated(&model)?;
        let modes = self.modes.or(preset.map(Preset::modes)).unwrap_or(20);
        let scheme = self
            .scheme
            .or(preset.map(|p| p.scheme().into()))
            .unwrap_or(if model.nonlinearity == Nonlinearity::Linear { RunScheme::Ftm } else { RunScheme::Sv });
        if scheme == RunScheme::Scan && model.nonlinearity != Nonlinearity::Linear {
            return Err(CliError::Incompatible(
                "nonlinear model requires a stepping scheme (ftm or sv); scan handles linear models only".into(),
            ));
        }
        let excitation = match self.excitation.take().or(preset.map(Preset::excitation)) {
            Some(e) => e,
            None => return Err(CliError::Config("`excitation` is required without a preset".into())),
        };
        let readout = match self.readout.or(preset.map(Preset::readout)) {
            Some(p) => p,
            None => return Err(CliError::Config("`readout` is required without a preset".into())),
        };
        let sample_rate = self.sample_rate.unwrap_or(44_100.0);
        let duration = self.duration.unwrap_or(1.0);
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(CliError::Config("sample_rate must be positive".into()));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(CliError::Config("duration must be positive".into()));
        }
        if modes == 0 {
            return Err(CliError::Config("modes must be at least 1".into()));
        }
        let airy_modes = match model.nonlinearity {
            Nonlinearity::VonKarman => Some(self.airy_modes.unwrap_or(modes)),
            _ => None,
        };
        let echo = RunConfig {
            preset,
            model: Some(model),
            modes: Some(modes),
            airy_modes,
            coupling_resolution: Some(self.coupling_resolution.unwrap_or(DEFAULT_RESOLUTION)),
            scheme: Some(scheme),
            excitation: Some(excitation),
            readout: Some(readout),
            duration: Some(duration),
            sample_rate: Some(sample_rate),
            oversample: Some(self.oversample.unwrap_or(16)),
            seed: Some(self.seed.unwrap_or(0)),
            normalise_wav: Some(self.normalise_wav.unwrap_or(false)),
            shape_grid: self.shape_grid,
            fit: self.fit,
            bench: self.bench,
        };
        Ok(Resolved { spec, echo })
    }
}

/// A configuration with every field decided.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: ValidatedSpec,
    /// Fully populated copy, echoed into manifests.
    pub echo: RunConfig,
}

impl Resolved {
    pub fn modes(&self) -> usize {
        self.echo.modes.unwrap_or_default()
    }

    pub fn scheme(&self) -> RunScheme {
        self.echo.scheme.unwrap_or(RunScheme::Ftm)
    }

    pub fn sample_rate(&self) -> f64 {
        self.echo.sample_rate.unwrap_or(44_100.0)
    }

    pub fn duration(&self) -> f64 {
        self.echo.duration.unwrap_or(1.0)
    }

    pub fn seed(&self) -> u64 {
        self.echo.seed.unwrap_or_default()
    }

    pub fn excitation(&self) -> &Excitation {
        self.echo.excitation.as_ref().expect("resolved configs carry an excitation")
    }

    pub fn readout(&self) -> Point {
        self.echo.readout.expect("resolved configs carry a readout")
    }

    pub fn basis(&self) -> CliResult<ModeBasis> {
        Ok(ModeBasis::for_geometry(&self.spec.geometry, self.modes())?)
    }

    /// Coupling tensors for von Kármán models, with parity zeros dropped.
    pub fn tensors(&self, basis: &ModeBasis) -> CliResult<Option<CouplingTensors>> {
        let Some(n_psi) = self.echo.airy_modes else { return Ok(None) };
        let psi = ModeBasis::for_geometry(&self.spec.geometry, n_psi)?;
        let resolution = self.echo.coupling_resolution.unwrap_or(DEFAULT_RESOLUTION);
        let mut t = CouplingTensors::simply_supported(basis, &psi, resolution)?;
        t.sparsify(SPARSITY_THRESHOLD);
        Ok(Some(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_fills_everything() {
        let r = RunConfig::default().resolve(Some(Preset::PlateVk), Some(9)).unwrap();
        assert_eq!(r.modes(), 10);
        assert_eq!(r.echo.airy_modes, Some(10));
        assert_eq!(r.seed(), 9);
        assert_eq!(r.scheme(), RunScheme::Sv);
        let text = serde_json::to_string(&r.echo).unwrap();
        let again: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(again, r.echo);
    }

    #[test]
    fn scan_rejects_nonlinear_models() {
        let cfg = RunConfig { scheme: Some(RunScheme::Scan), ..Default::default() };
        let err = cfg.resolve(Some(Preset::PlateVk), None).unwrap_err();
        assert!(matches!(err, CliError::Incompatible(_)));
        assert!(err.to_string().contains("nonlinear model requires a stepping scheme"));
    }

    #[test]
    fn missing_model_is_a_config_error() {
        assert!(matches!(RunConfig::default().resolve(None, None), Err(CliError::Config(_))));
    }
}
