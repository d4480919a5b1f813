//! When do the two counter-propagating pulses pass each modulator?
//!
//! The delay line staggers the CW and CCW pulses so Alice can modulate one
//! without touching the other. Without it they arrive together.

use sagnac_qkd::loopmodel::{
    timing_schedule, Component, LoopConfig, Owner, DEFAULT_GATE_WINDOW_S, DEFAULT_GROUP_INDEX,
};

fn layout(delay_m: f64) -> LoopConfig {
    LoopConfig::new(vec![
        Component::PhaseModulator { owner: Owner::Bob },
        Component::delay(delay_m, 2.0),
        Component::fiber(200.0, 2.0),
        Component::PhaseModulator { owner: Owner::Alice },
        Component::Attenuator { transmittance: 1.0 },
        Component::fiber(200.0, 2.0),
    ])
}

fn main() -> sagnac_qkd::Result<()> {
    for delay in [800.0, 10.0, 1.0, 0.0] {
        let t = timing_schedule(&layout(delay), DEFAULT_GROUP_INDEX, DEFAULT_GATE_WINDOW_S)?;
        println!(
            "delay {delay:>5} m: pulses {:.3} ns apart at Alice, {:.3} ns at Bob, conflict {}",
            t.separation_at_alice_s * 1e9,
            t.separation_at_bob_s * 1e9,
            t.conflict
        );
    }

    println!("\narrivals with the 800 m delay:");
    for e in timing_schedule(&layout(800.0), DEFAULT_GROUP_INDEX, DEFAULT_GATE_WINDOW_S)?.entries {
        println!(
            "  #{} {:<16} {:<4} {:>10.3} ns",
            e.index,
            e.kind.to_string(),
            e.direction.to_string(),
            e.arrival_s * 1e9
        );
    }
    Ok(())
}
