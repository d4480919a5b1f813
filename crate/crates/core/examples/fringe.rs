//! Interference fringe of an ideal two-party loop.
//!
//! Scans the phase difference between Alice's and Bob's modulators and
//! prints the probability of each detector firing next to cos²(Δφ/2).

use sagnac_qkd::loopmodel::{Component, LoopConfig, LoopModel, Owner};

fn main() -> sagnac_qkd::Result<()> {
    let cfg = LoopConfig::new(vec![
        Component::PhaseModulator { owner: Owner::Bob },
        Component::delay(800.0, 0.0),
        Component::fiber(200.0, 0.0),
        Component::PhaseModulator { owner: Owner::Alice },
        Component::Attenuator { transmittance: 1.0 },
        Component::fiber(200.0, 0.0),
    ]);
    let model = LoopModel::new(&cfg)?;

    println!("{:>8} {:>10} {:>10} {:>12}", "dphi", "p1", "p2", "cos^2(d/2)");
    for k in 0..=16 {
        let d = std::f64::consts::TAU * k as f64 / 16.0;
        let (p1, p2) = model.probs_at(d);
        println!("{d:8.4} {p1:10.6} {p2:10.6} {:12.6}", (d / 2.0).cos().powi(2));
    }
    println!("visibility {:.12}", model.visibility()?);
    Ok(())
}
