//! Small benchmark runs: report shape, statistics and CSV layout.

use modal_bench::{bench_system, run_benchmark, run_steps, BenchModel, BenchSettings};
use modal_integrators::SchemeKind;

fn tiny() -> BenchSettings {
    BenchSettings { mode_counts: vec![4, 8], repetitions: 5, warmups: 1, duration: 0.01, ..BenchSettings::default() }
}

#[test]
fn report_covers_every_configuration() {
    let settings = tiny();
    let report = run_benchmark(&settings).unwrap();
    assert_eq!(report.cases.len(), 4);
    for model in [BenchModel::VonKarman, BenchModel::Berger] {
        for modes in [4, 8] {
            let c = report.case(model, modes).unwrap();
            assert_eq!(c.samples.len(), 5);
            assert_eq!(c.steps, 441);
            assert!(c.min <= c.q1 && c.q1 <= c.median && c.median <= c.q3 && c.q3 <= c.max);
            assert!((c.median_per_step * c.steps as f64 - c.median).abs() <= 1e-12 * c.median);
        }
    }
    let samples = report.samples_csv();
    assert_eq!(samples.lines().count(), 1 + 4 * 5);
    assert!(samples.lines().nth(1).unwrap().starts_with("von-karman,4,0,"));
    let summary = report.summary_csv();
    assert_eq!(summary.lines().count(), 5);
    assert_eq!(summary.lines().next().unwrap().split(',').count(), summary.lines().nth(1).unwrap().split(',').count());
    let back: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(back["cases"].as_array().unwrap().len(), 4);
}

#[test]
fn stepping_is_deterministic() {
    let (system, drive) = bench_system(BenchModel::VonKarman, 6, SchemeKind::Sv, 44_100.0).unwrap();
    let a = run_steps(&system, &drive, 500).unwrap();
    let b = run_steps(&system, &drive, 500).unwrap();
    assert!(a.is_finite() && a != 0.0);
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn invalid_settings_are_rejected() {
    for bad in [
        BenchSettings { repetitions: 0, ..tiny() },
        BenchSettings { mode_counts: vec![0], ..tiny() },
        BenchSettings { models: vec![], ..tiny() },
        BenchSettings { duration: 1e-6, ..tiny() },
    ] {
        assert!(run_benchmark(&bad).is_err(), "{bad:?}");
    }
}
