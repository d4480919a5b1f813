//! QBER against the fraction of pulses an intercept-resend attacker touches.

use sagnac_qkd::harness::{sweep, Axis, Scenario, SweepResult};

fn main() -> sagnac_qkd::Result<()> {
    let s = Scenario::from_toml_str("[protocol]\npulses = 500000\n[loop]\nloss_db_per_km = 0.0\n")?;
    let grid: Vec<f64> = (0..=5).map(|k| k as f64 / 5.0).collect();
    let SweepResult::Sessions { points, .. } = sweep(&s, Axis::EveFraction, &grid)? else {
        unreachable!()
    };
    println!("fraction   qber    95% interval       closed form");
    for p in points {
        let st = p.report.stats;
        let (lo, hi) = st.qber_interval.unwrap();
        println!(
            "{:8.2}  {:.4}  [{lo:.4}, {hi:.4}]  {:.4}",
            p.value,
            st.qber.unwrap(),
            p.report.expected.qber.unwrap()
        );
    }
    Ok(())
}
