use modal_core::modes::ModeBasis;
use modal_coupling::{tension_nl_force, vk_nl_force, CouplingTensors, VkContraction, DEFAULT_RESOLUTION};
use proptest::prelude::*;

const YOUNGS: f64 = 2e11;
const RHO: f64 = 7.8;

fn plate_tensors(modes: usize) -> CouplingTensors {
    let basis = ModeBasis::rect(0.2, 0.3, modes).unwrap();
    CouplingTensors::simply_supported(&basis, &basis, DEFAULT_RESOLUTION).unwrap()
}

fn amplitudes(max: f64, len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-max..max, len)
}

#[test]
fn saved_tensors_reload_bit_for_bit() {
    let ct = plate_tensors(6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.bin");
    ct.save(&path).unwrap();
    let back = CouplingTensors::load(&path).unwrap();
    assert_eq!(back.h, ct.h);
    assert_eq!(back.c, ct.c);
    assert_eq!(back.zeta4, ct.zeta4);
    assert!(CouplingTensors::load(&dir.path().join("missing.bin")).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn von_karman_force_is_cubic_and_does_positive_work(q in amplitudes(1e-4, 8), scale in -3.0f64..3.0) {
        let ct = plate_tensors(8);
        let f = vk_nl_force(&q, &ct, YOUNGS, RHO).unwrap();
        let scaled_q: Vec<f64> = q.iter().map(|v| v * scale).collect();
        let g = vk_nl_force(&scaled_q, &ct, YOUNGS, RHO).unwrap();
        let norm = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in f.iter().zip(&g) {
            prop_assert!((b - scale.powi(3) * a).abs() <= 1e-10 * norm.max(f64::MIN_POSITIVE) * scale.abs().powi(3).max(1.0));
        }
        let work: f64 = q.iter().zip(&f).map(|(q, f)| q * f).sum();
        prop_assert!(work >= -1e-12 * norm * q.iter().map(|v| v.abs()).sum::<f64>());
    }

    #[test]
    fn sparse_contraction_matches_the_dense_force(q in amplitudes(1e-4, 8)) {
        let mut ct = plate_tensors(8);
        let dense = vk_nl_force(&q, &ct, YOUNGS, RHO).unwrap();
        ct.sparsify(modal_coupling::SPARSITY_THRESHOLD);
        let contraction = VkContraction::new(&ct, YOUNGS / (2.0 * RHO));
        let mut eta = vec![0.0; ct.n_psi];
        let mut out = vec![0.0; ct.n_phi];
        contraction.force(&q, &mut eta, &mut out);
        let norm = dense.iter().map(|v| v.abs()).fold(f64::MIN_POSITIVE, f64::max);
        for (a, b) in dense.iter().zip(&out) {
            prop_assert!((a - b).abs() <= 1e-12 * norm);
        }
    }

    #[test]
    fn tension_force_is_a_stiffening(q in amplitudes(1e-3, 10), tau in 0.0f64..1e6) {
        let basis = ModeBasis::string(0.65, 10).unwrap();
        let f = tension_nl_force(&q, &basis, tau);
        for (qk, fk) in q.iter().zip(&f) {
            prop_assert!(qk * fk >= 0.0);
        }
    }
}
