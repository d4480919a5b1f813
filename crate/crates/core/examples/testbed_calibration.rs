//! Fit the unpublished loss and visibility to 1.2 kHz raw rate and 5.4% QBER,
//! then check the fit with a Monte Carlo run.

use sagnac_qkd::harness::{self, calibrate, load_scenario, CalibrationTargets, QberKnob, RateKnob};

fn main() -> sagnac_qkd::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/testbed.toml");
    let base = load_scenario(path)?;
    let targets = CalibrationTargets {
        raw_rate: 1200.0,
        qber: 0.054,
    };
    let fit = calibrate(&base, targets, RateKnob::ExtraTransmittance, QberKnob::Misalignment)?;
    println!(
        "extra transmittance {:.6}, misalignment {:.6} rad, visibility {:.6}",
        fit.rate_value,
        fit.qber_value,
        fit.visibility.unwrap()
    );
    println!("sifted probability per pulse {:.6}", fit.expected.p_sift);

    let mut s = fit.scenario;
    s.protocol.pulses = 2_000_000;
    let r = harness::run(&s)?;
    let (lo, hi) = r.stats.qber_interval.unwrap();
    println!(
        "{} pulses: raw {:.1} Hz, qber {:.4} [{lo:.4}, {hi:.4}]",
        r.stats.pulses_sent,
        r.stats.raw_rate,
        r.stats.qber.unwrap()
    );
    Ok(())
}
