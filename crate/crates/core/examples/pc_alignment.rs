//! Restoring visibility in a birefringent loop with a polarization controller.
//!
//! Every fiber gets a random unitary. A quarter/half/quarter controller next
//! to the coupler is then tuned to maximize the fringe visibility.

use sagnac_qkd::jones::{optimize_pc, pc_matrix, JonesOperator, PcSetting};
use sagnac_qkd::loopmodel::{Component, LoopConfig, LoopModel, Owner};
use sagnac_qkd::rng::{RngStream, Substream};

fn fiber(len: f64, seed: u64, i: u64) -> Component {
    Component::Fiber {
        length_m: len,
        loss_db_per_km: 0.0,
        jones: JonesOperator::random_unitary(&mut RngStream::substream(seed, Substream::Birefringence, i)),
    }
}

fn loop_with(pc: JonesOperator, seed: u64) -> LoopConfig {
    LoopConfig::new(vec![
        Component::PolController { jones: pc },
        Component::PhaseModulator { owner: Owner::Bob },
        Component::DelayFiber {
            length_m: 800.0,
            loss_db_per_km: 0.0,
            jones: JonesOperator::random_unitary(&mut RngStream::substream(seed, Substream::Birefringence, 0)),
        },
        fiber(200.0, seed, 1),
        Component::PhaseModulator { owner: Owner::Alice },
        Component::Attenuator { transmittance: 1.0 },
        fiber(200.0, seed, 2),
    ])
}

fn visibility(pc: &PcSetting, seed: u64) -> f64 {
    LoopModel::new(&loop_with(pc_matrix(pc), seed))
        .and_then(|m| m.visibility())
        .unwrap_or(0.0)
}

fn main() -> sagnac_qkd::Result<()> {
    for seed in 1..=5 {
        let before = LoopModel::new(&loop_with(JonesOperator::identity(), seed))?.visibility()?;
        let best = optimize_pc(|s| visibility(s, seed), PcSetting::new(0.0, 0.0, 0.0), 1e-12)?;
        let [a, b, c] = best.angles();
        println!(
            "seed {seed}: visibility {before:.6} -> {:.12}  (pc angles {a:.4}, {b:.4}, {c:.4})",
            visibility(&best, seed)
        );
    }
    Ok(())
}
