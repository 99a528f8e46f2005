use super::bank::{oscillator_bank, OscillatorBank};
use super::excitation::ModalDrive;
use super::hook::NonlinearHook;
use super::scheme::{SchemeCoeffs, SchemeKind, SimState, Stepper};
use super::trajectory::Trajectory;
use modal_coupling::CouplingTensors;
use modal_core::error::{Error, Result};
use modal_core::model::{derive_normalized, von_karman_prefactor, Nonlinearity, ValidatedSpec};
use modal_core::modes::{ModeBasis, PointReadout};

/// Everything needed to step a model: linear bank, scheme coefficients and
/// nonlinear force.
#[derive(Debug, Clone)]
pub struct ModalSystem {
    pub bank: OscillatorBank,
    pub coeffs: SchemeCoeffs,
    pub hook: NonlinearHook,
}

impl ModalSystem {
    pub fn new(bank: OscillatorBank, coeffs: SchemeCoeffs, hook: NonlinearHook) -> Result<Self> {
        if coeffs.len() != bank.len() {
            return Err(Error::arg("scheme coefficients do not match the oscillator bank"));
        }
        Ok(Self { bank, coeffs, hook })
    }

    /// Builds the system for a validated model. Von Kármán models need
    /// coupling tensors built on `basis`.
    pub fn for_model(
        spec: &ValidatedSpec,
        basis: &ModeBasis,
        tensors: Option<&CouplingTensors>,
        scheme: SchemeKind,
        sample_rate: f64,
    ) -> Result<Self> {
        let bank = oscillator_bank(spec, basis);
        let coeffs = SchemeCoeffs::new(scheme, &bank, 1.0 / sample_rate)?;
        let hook = match spec.nonlinearity {
            Nonlinearity::Linear => NonlinearHook::Linear,
            Nonlinearity::TensionModulated => NonlinearHook::tension(basis, derive_normalized(spec).tau),
            Nonlinearity::VonKarman => {
                let t = tensors.ok_or_else(|| Error::Incompatible("von Kármán model needs coupling tensors".into()))?;
                if t.n_phi != basis.len() {
                    return Err(Error::arg("coupling tensors were built for a different basis size"));
                }
                NonlinearHook::von_karman(t, von_karman_prefactor(spec))
            }
        };
        Self::new(bank, coeffs, hook)
    }

    pub fn modes(&self) -> usize {
        self.bank.len()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.coeffs.period()
    }
}

/// Number of samples for a duration, rounded to the nearest sample.
pub fn samples_for(duration: f64, sample_rate: f64) -> usize {
    (duration * sample_rate).round() as usize
}

/// Runs `samples` samples (`q^0 .. q^{samples-1}`).
pub fn simulate(
    system: &ModalSystem,
    drive: &ModalDrive,
    samples: usize,
    readout: Option<&PointReadout>,
) -> Result<Trajectory> {
    let m = system.modes();
    if drive.modes() != m {
        return Err(Error::arg(format!("excitation has {} modes, system has {m}", drive.modes())));
    }
    let period = system.coeffs.period();
    let mut state = SimState::from_initial(&drive.q0, &drive.v0, &system.bank, period, &system.hook);
    let start_prev = state.q_prev.clone();
    let mut stepper = Stepper::new(&system.coeffs, &system.hook);
    let mut modal = Vec::with_capacity(samples * m);
    let mut force = vec![0.0; m];
    for n in 0..samples {
        modal.extend_from_slice(&state.q_curr);
        if n + 1 < samples {
            drive.force_at(n, &mut force);
            stepper.step(&mut state, &force)?;
        }
    }
    let mut traj = Trajectory { sample_rate: 1.0 / period, modes: m, modal, start_prev, readout: None };
    if let Some(r) = readout {
        traj.apply_readout(r)?;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use modal_coupling::DEFAULT_RESOLUTION;
    use crate::excitation::Pluck;
    use modal_core::model::{validated, Geometry, MaterialParams, ModelSpec};
    use modal_core::modes::Point;

    fn plate_spec() -> ModelSpec {
        ModelSpec {
            material: MaterialParams { rho: 7800.0, youngs: 2e11, poisson: 0.3, d1: 0.5, d3: 0.0 },
            geometry: Geometry::RectPlate { lx: 0.2, ly: 0.3, thickness: 1e-3 },
            tension: 0.0,
            stiffness: None,
            nonlinearity: Nonlinearity::VonKarman,
            density_convention: None,
        }
    }

    #[test]
    fn plate_run_has_requested_length() {
        let spec = validated(&plate_spec()).unwrap();
        let basis = ModeBasis::for_geometry(&spec.geometry, 4).unwrap();
        let t = CouplingTensors::simply_supported(&basis, &basis, DEFAULT_RESOLUTION).unwrap();
        let sys = ModalSystem::for_model(&spec, &basis, Some(&t), SchemeKind::Sv, 44100.0).unwrap();
        let q0 = Pluck { location: Point::new(0.07, 0.11), amplitude: 1e-4 }.modal(&basis).unwrap();
        let drive = ModalDrive::free(q0, vec![0.0; 4]).unwrap();
        let steps = samples_for(0.4, 44100.0);
        assert_eq!(steps, 17_640);
        let traj = simulate(&sys, &drive, steps, Some(&basis.readout(Point::new(0.05, 0.05)).unwrap())).unwrap();
        assert_eq!(traj.len(), 17_640);
        assert_eq!(traj.readout.as_ref().unwrap().len(), 17_640);
        assert!(ModalSystem::for_model(&spec, &basis, None, SchemeKind::Sv, 44100.0).is_err());
    }

    #[test]
    fn zero_excitation_is_silent_and_runs_are_deterministic() {
        let spec = validated(&plate_spec()).unwrap();
        let basis = ModeBasis::for_geometry(&spec.geometry, 3).unwrap();
        let t = CouplingTensors::simply_supported(&basis, &basis, DEFAULT_RESOLUTION).unwrap();
        let sys = ModalSystem::for_model(&spec, &basis, Some(&t), SchemeKind::Ftm, 44100.0).unwrap();
        let silent = simulate(&sys, &ModalDrive::free(vec![0.0; 3], vec![0.0; 3]).unwrap(), 500, None).unwrap();
        assert!(silent.modal.iter().all(|v| *v == 0.0));
        let drive = ModalDrive::free(vec![1e-4, 0.0, 2e-5], vec![0.0; 3]).unwrap();
        let a = simulate(&sys, &drive, 500, None).unwrap();
        let b = simulate(&sys, &drive, 500, None).unwrap();
        assert_eq!(a, b);
    }
}
