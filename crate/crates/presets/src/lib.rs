//! Ready-made instruments with sensible excitation, readout and fit
//! settings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use modal_core::error::{Error, Result};
use modal_fitting::{FitConfig, LossWeights};
use modal_integrators::{Excitation, ForceSignal, Pluck, RaisedCosine, SchemeKind};
use modal_core::model::{Geometry, MaterialParams, ModelSpec, Nonlinearity};
use modal_core::modes::Point;

/// Steel plate used by both plate presets.
const PLATE_RHO: f64 = 7800.0;
const PLATE_THICKNESS: f64 = 1e-3;
/// Normalised bending stiffness of the von Kármán plate preset.
pub const PLATE_VK_D_HAT: f64 = 5.8328;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    StringLinear,
    StringKc,
    MembraneBerger,
    PlateLinear,
    PlateVk,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::StringLinear, Preset::StringKc, Preset::MembraneBerger, Preset::PlateLinear, Preset::PlateVk];

    pub fn name(self) -> &'static str {
        match self {
            Preset::StringLinear => "string-linear",
            Preset::StringKc => "string-kc",
            Preset::MembraneBerger => "membrane-berger",
            Preset::PlateLinear => "plate-linear",
            Preset::PlateVk => "plate-vk",
        }
    }

    pub fn spec(self) -> ModelSpec {
        match self {
            Preset::StringLinear | Preset::StringKc => {
                // 0.4 mm radius steel wire on a 0.65 m scale
                let radius: f64 = 4e-4;
                let area = std::f64::consts::PI * radius * radius;
                let rho = 7850.0 * area;
                ModelSpec {
                    material: MaterialParams { rho, youngs: 2e11, poisson: 0.3, d1: 2.0 * rho * 0.8, d3: 2.0 * rho * 2e-4 },
                    geometry: Geometry::String { length: 0.65, area },
                    tension: 60.0,
                    stiffness: Some(2e11 * std::f64::consts::PI * radius.powi(4) / 4.0),
                    nonlinearity: if self == Preset::StringKc {
                        Nonlinearity::TensionModulated
                    } else {
                        Nonlinearity::Linear
                    },
                    density_convention: None,
                }
            }
            Preset::MembraneBerger => ModelSpec {
                material: MaterialParams { rho: PLATE_RHO, youngs: 2e11, poisson: 0.3, d1: 2.0 * 3.9 * 1.5, d3: 0.0 },
                geometry: Geometry::RectMembrane { lx: 0.3, ly: 0.25, thickness: 5e-4 },
                tension: 200.0,
                stiffness: None,
                nonlinearity: Nonlinearity::TensionModulated,
                density_convention: None,
            },
            Preset::PlateLinear | Preset::PlateVk => {
                let rho_eff = PLATE_RHO * PLATE_THICKNESS;
                ModelSpec {
                    material: MaterialParams { rho: PLATE_RHO, youngs: 2e11, poisson: 0.3, d1: 2.0 * rho_eff * 2.0, d3: 0.0 },
                    geometry: Geometry::RectPlate { lx: 0.2, ly: 0.3, thickness: PLATE_THICKNESS },
                    tension: 0.0,
                    stiffness: Some(PLATE_VK_D_HAT * rho_eff),
                    nonlinearity: if self == Preset::PlateVk { Nonlinearity::VonKarman } else { Nonlinearity::Linear },
                    density_convention: None,
                }
            }
        }
    }

    /// Transverse mode count.
    pub fn modes(self) -> usize {
        match self {
            Preset::StringLinear | Preset::StringKc => 40,
            Preset::MembraneBerger => 20,
            Preset::PlateLinear => 40,
            Preset::PlateVk => 10,
        }
    }

    pub fn scheme(self) -> SchemeKind {
        match self {
            Preset::StringLinear | Preset::PlateLinear => SchemeKind::Ftm,
            _ => SchemeKind::Sv,
        }
    }

    pub fn excitation(self) -> Excitation {
        match self {
            Preset::StringLinear => Excitation::Pluck(Pluck { location: Point::on_line(0.13), amplitude: 1e-3 }),
            Preset::StringKc => Excitation::Pluck(Pluck { location: Point::on_line(0.13), amplitude: 3e-3 }),
            Preset::MembraneBerger => Excitation::PointForce {
                location: Point::new(0.071, 0.093),
                signal: ForceSignal::RaisedCosine(RaisedCosine { amplitude: 200.0, onset: 0.0, duration: 1e-3 }),
            },
            Preset::PlateLinear | Preset::PlateVk => Excitation::PointForce {
                location: Point::new(0.061, 0.093),
                signal: ForceSignal::RaisedCosine(RaisedCosine { amplitude: 100.0, onset: 0.0, duration: 1e-3 }),
            },
        }
    }

    pub fn readout(self) -> Point {
        match self {
            Preset::StringLinear | Preset::StringKc => Point::on_line(0.071),
            Preset::MembraneBerger => Point::new(0.193, 0.061),
            Preset::PlateLinear | Preset::PlateVk => Point::new(0.047, 0.081),
        }
    }

    pub fn is_nonlinear(self) -> bool {
        self.spec().nonlinearity != Nonlinearity::Linear
    }

    /// 1,000 steps from 100 starts for nonlinear models, 15,000 steps from
    /// one start for linear ones. Plates weight the log-magnitude loss down.
    pub fn fit_config(self) -> FitConfig {
        let mut cfg = if self.is_nonlinear() { FitConfig::nonlinear_default() } else { FitConfig::linear_default() };
        if matches!(self, Preset::PlateLinear | Preset::PlateVk) {
            cfg.loss = LossWeights::plate_preset();
        }
        cfg
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
            Error::arg(format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
        })
    }
}
