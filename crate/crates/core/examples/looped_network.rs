//! Bob keys with each entity on a shared ring in turn. One entity scrambles
//! the phase of everything passing through it; every session except its own
//! sees the noise.

use sagnac_qkd::harness::{self, load_scenario};
use sagnac_qkd::loopnet::{detect_disturbance, DEFAULT_DISTURBANCE_THRESHOLD};

fn main() -> sagnac_qkd::Result<()> {
    let mut ring = load_scenario(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/ring4.toml"))?;
    ring.protocol.pulses = 300_000;
    let ids: Vec<String> = ring.ring.as_ref().unwrap().entities.iter().map(|e| e.id.clone()).collect();
    for id in ids {
        let r = harness::run(&ring.with_partner(&id)?)?;
        println!(
            "{id:>6}: {} sifted bits, qber {:.4} -> {:?}",
            r.stats.sifted_bits,
            r.stats.qber.unwrap_or(f64::NAN),
            detect_disturbance(&r.stats, DEFAULT_DISTURBANCE_THRESHOLD)
        );
    }
    ring.ring.as_mut().unwrap().entities.iter_mut().for_each(|e| e.disturbance = None);
    let r = harness::run(&ring)?;
    println!(
        "all quiet, partner carol: qber {:.4} -> {:?}",
        r.stats.qber.unwrap(),
        detect_disturbance(&r.stats, DEFAULT_DISTURBANCE_THRESHOLD)
    );
    Ok(())
}
