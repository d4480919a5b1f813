//! Weak coherent pulses on two imperfect detectors.
//!
//! Closed-form joint click probabilities against Monte Carlo frequencies.

use sagnac_qkd::channel::{click_probabilities, sample_pulse, ClickOutcome, DetectorParams, SourceParams};
use sagnac_qkd::rng::RngStream;

fn main() -> sagnac_qkd::Result<()> {
    let det = DetectorParams {
        efficiency: 0.45,
        dark_prob: 1e-3,
        ..Default::default()
    };
    let draws = 1_000_000u64;
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}   sampled d1", "mu", "none", "d1", "d2", "both");
    for mu in [0.01, 0.1, 0.5, 2.0] {
        let src = SourceParams { mu, ..Default::default() };
        // 90/10 split between the detectors
        let q = click_probabilities(0.9, 0.1, &src, &det)?;
        let mut rng = RngStream::new(7);
        let mut d1 = 0u64;
        for _ in 0..draws {
            d1 += u64::from(sample_pulse(&q, &mut rng)? == ClickOutcome::D1);
        }
        println!(
            "{mu:5} {:10.6} {:10.6} {:10.6} {:10.3e}   {:.6}",
            q.none,
            q.d1_only,
            q.d2_only,
            q.both,
            d1 as f64 / draws as f64
        );
    }
    Ok(())
}
