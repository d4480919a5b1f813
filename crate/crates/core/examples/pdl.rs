//! Visibility lost to polarization-dependent loss inside Alice's module.
//!
//! The birefringent loop is first aligned with the controller at the coupler.
//! Adding a diattenuator with that setting kept costs visibility; re-tuning
//! the controller recovers it here.

use sagnac_qkd::jones::{optimize_pc, pc_matrix, JonesOperator, PcSetting};
use sagnac_qkd::loopmodel::{pdl_penalty, Component, LoopConfig, Owner};
use sagnac_qkd::rng::{RngStream, Substream};

fn fiber(seed: u64, i: u64) -> Component {
    Component::Fiber {
        length_m: 200.0,
        loss_db_per_km: 2.0,
        jones: JonesOperator::random_unitary(&mut RngStream::substream(seed, Substream::Birefringence, i)),
    }
}

fn layout(seed: u64, pc: &PcSetting, t_min: f64) -> LoopConfig {
    LoopConfig::new(vec![
        Component::PolController { jones: pc_matrix(pc) },
        Component::PhaseModulator { owner: Owner::Bob },
        Component::delay(800.0, 2.0),
        fiber(seed, 1),
        Component::PhaseModulator { owner: Owner::Alice },
        Component::PdlElement {
            t_max: 1.0,
            t_min,
            axis: 0.3,
        },
        Component::Attenuator { transmittance: 1.0 },
        fiber(seed, 2),
    ])
}

fn best_pc(seed: u64, t_min: f64) -> sagnac_qkd::Result<PcSetting> {
    optimize_pc(
        |pc| pdl_penalty(&layout(seed, pc, t_min)).unwrap_or(0.0),
        PcSetting::new(0.0, 0.0, 0.0),
        1e-12,
    )
}

fn main() -> sagnac_qkd::Result<()> {
    for seed in [1, 2] {
        let aligned = best_pc(seed, 1.0)?;
        println!("seed {seed}\n{:>6} {:>10} {:>10}", "t_min", "fixed pc", "re-tuned");
        for t_min in [1.0, 0.9, 0.7, 0.5, 0.2] {
            let fixed = pdl_penalty(&layout(seed, &aligned, t_min))?;
            let retuned = pdl_penalty(&layout(seed, &best_pc(seed, t_min)?, t_min))?;
            println!("{t_min:6.2} {fixed:10.6} {retuned:10.6}");
        }
    }
    Ok(())
}
