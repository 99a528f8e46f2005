use modal_coupling::{CouplingTensors, VkContraction};
use modal_core::modes::ModeBasis;

/// Tension-modulation force with the basis norms folded in.
#[derive(Debug, Clone)]
pub struct TensionHook {
    pub tau: f64,
    /// `lambda_mu / |Phi_mu|²`
    pub out_weight: Vec<f64>,
    /// `lambda_nu |Phi_nu|²`
    pub energy_weight: Vec<f64>,
}

impl TensionHook {
    pub fn new(basis: &ModeBasis, tau: f64) -> Self {
        let lam = basis.eigenvalues();
        let norms = basis.norms_sq();
        Self {
            tau,
            out_weight: lam.iter().zip(&norms).map(|(l, n)| l / n).collect(),
            energy_weight: lam.iter().zip(&norms).map(|(l, n)| l * n).collect(),
        }
    }

    /// `sum_nu lambda_nu |Phi_nu|² q_nu²`
    pub fn energy(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.energy_weight).map(|(q, w)| w * q * q).sum()
    }
}

/// The nonlinear modal force subtracted from the input channel each step.
#[derive(Debug, Clone, Default)]
pub enum NonlinearHook {
    #[default]
    Linear,
    Tension(TensionHook),
    VonKarman(VkContraction),
}

impl NonlinearHook {
    pub fn tension(basis: &ModeBasis, tau: f64) -> Self {
        NonlinearHook::Tension(TensionHook::new(basis, tau))
    }

    pub fn von_karman(tensors: &CouplingTensors, kappa: f64) -> Self {
        NonlinearHook::VonKarman(VkContraction::new(tensors, kappa))
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, NonlinearHook::Linear)
    }

    /// Scratch length needed by [`Self::apply`].
    pub fn scratch_len(&self) -> usize {
        match self {
            NonlinearHook::VonKarman(vk) => vk.n_psi,
            _ => 0,
        }
    }

    /// Writes the force for amplitudes `q` into `out`.
    pub fn apply(&self, q: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        match self {
            NonlinearHook::Linear => out.iter_mut().for_each(|v| *v = 0.0),
            NonlinearHook::Tension(t) => {
                let s = t.tau * t.energy(q);
                for ((o, q), w) in out.iter_mut().zip(q).zip(&t.out_weight) {
                    *o = w * q * s;
                }
            }
            NonlinearHook::VonKarman(vk) => vk.force(q, scratch, out),
        }
    }

    /// Allocating convenience wrapper around [`Self::apply`].
    pub fn force(&self, q: &[f64]) -> Vec<f64> {
        let mut scratch = vec![0.0; self.scratch_len()];
        let mut out = vec![0.0; q.len()];
        self.apply(q, &mut scratch, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use modal_coupling::{tension_nl_force, vk_nl_force, DEFAULT_RESOLUTION};

    #[test]
    fn hooks_match_reference_forces() {
        let b = ModeBasis::string(1.0, 6).unwrap();
        let q = [0.1, -0.05, 0.02, 0.0, 0.01, -0.03];
        let hook = NonlinearHook::tension(&b, 3.0);
        let want = tension_nl_force(&q, &b, 3.0);
        for (a, b) in hook.force(&q).iter().zip(&want) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-12));
        }

        let p = ModeBasis::rect(1.0, 0.8, 5).unwrap();
        let ct = CouplingTensors::simply_supported(&p, &p, DEFAULT_RESOLUTION).unwrap();
        let hook = NonlinearHook::von_karman(&ct, 1.5);
        let q = [0.1, -0.05, 0.02, 0.0, 0.01];
        let want = vk_nl_force(&q, &ct, 3.0, 1.0).unwrap();
        for (a, b) in hook.force(&q).iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-9));
        }
        assert_eq!(NonlinearHook::Linear.force(&q), vec![0.0; 5]);
    }
}
