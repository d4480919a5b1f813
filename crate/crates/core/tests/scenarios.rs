use std::f64::consts::TAU;
use std::path::PathBuf;

use sagnac_qkd::harness::{self, load_scenario, sweep, Axis, Scenario, SweepResult};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

#[test]
fn minimal_file_defaults() {
    let s = load_scenario(scenario("minimal.toml")).unwrap();
    assert_eq!(s.source.rep_rate, 100e3);
    assert_eq!(s.source.wavelength, 830e-9);
    let l = s.two_party.as_ref().unwrap();
    assert_eq!(l.misalignment_rad, 0.0);
    assert_eq!(l.extra_transmittance, 1.0);
    assert_eq!(s.detectors.efficiency, 1.0);
    assert_eq!(s.detectors.dark_prob, 0.0);
}

#[test]
fn shipped_testbed_scenario() {
    let s = load_scenario(scenario("testbed.toml")).unwrap();
    let l = s.two_party.as_ref().unwrap();
    assert_eq!(s.source.mu, 0.1);
    assert_eq!(s.source.rep_rate, 100e3);
    assert_eq!((l.upper_length_m, l.lower_length_m, l.delay_length_m), (200.0, 200.0, 800.0));
}

#[test]
fn ideal_run_matches_closed_form() {
    let s = load_scenario(scenario("ideal.toml")).unwrap();
    let r = harness::run(&s).unwrap();
    let p = 0.5 * (1.0 - (-0.1f64).exp());
    let n = s.protocol.pulses as f64;
    let sd = (n * p * (1.0 - p)).sqrt();
    assert!((r.stats.sifted_bits as f64 - n * p).abs() < 3.0 * sd);
    assert_eq!(r.stats.errors, 0);
}

#[test]
fn calibrated_round_trip_within_three_sigma() {
    let s = load_scenario(scenario("testbed_calibrated.toml")).unwrap();
    let mut short = s.clone();
    short.protocol.pulses = 2_000_000;
    short.seed = 77;
    let r = harness::run(&short).unwrap();
    let n = short.protocol.pulses as f64;
    let p = 0.012;
    assert!((r.stats.sifted_bits as f64 - n * p).abs() < 3.0 * (n * p * (1.0 - p)).sqrt());
    let m = r.stats.sifted_bits as f64;
    assert!((r.stats.qber.unwrap() - 0.054).abs() < 3.0 * (0.054 * 0.946 / m).sqrt());
}

#[test]
fn fringe_sweep_is_cos_squared() {
    let s = load_scenario(scenario("ideal.toml")).unwrap();
    let grid: Vec<f64> = (0..64).map(|k| TAU * k as f64 / 63.0).collect();
    let SweepResult::Fringe(points) = sweep(&s, Axis::DeltaPhi, &grid).unwrap() else {
        panic!()
    };
    for p in points {
        assert!((p.p1 - (p.delta_phi / 2.0).cos().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn link_length_sweep_decays_with_loss() {
    let mut s = Scenario::default();
    s.protocol.pulses = 1000;
    s.source.mu = 0.01;
    let SweepResult::Sessions { points, .. } = sweep(&s, Axis::LinkLengthM, &[1.0, 10e3, 25e3, 50e3]).unwrap() else {
        panic!()
    };
    // at small mu the sifted probability is proportional to transmittance
    let r0 = points[0].report.expected.raw_rate;
    for p in &points {
        let extra_db = 2.0 * 2.0 * (p.value - 1.0) / 1e3;
        let want = r0 * 10f64.powf(-extra_db / 10.0);
        assert!((p.report.expected.raw_rate / want - 1.0).abs() < 0.01, "{} {}", p.value, p.report.expected.raw_rate);
    }
}

#[test]
fn eve_fraction_sweep_is_linear() {
    let s = load_scenario(scenario("ideal.toml")).unwrap();
    let mut s = s;
    s.protocol.pulses = 1000;
    let SweepResult::Sessions { points, .. } = sweep(&s, Axis::EveFraction, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap() else {
        panic!()
    };
    let q: Vec<f64> = points.iter().map(|p| p.report.expected.qber.unwrap()).collect();
    assert!(q[0].abs() < 1e-15);
    assert!((q[4] - 0.25).abs() < 0.005);
    for (i, p) in points.iter().enumerate() {
        assert!((q[i] - q[4] * p.value).abs() < 5e-3, "{q:?}");
    }
}
