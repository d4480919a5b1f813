//! A short BB84 session: per-pulse transcript, sifting and statistics.

use sagnac_qkd::bb84::sift;
use sagnac_qkd::harness::{self, Scenario};

fn main() -> sagnac_qkd::Result<()> {
    let s = Scenario::from_toml_str(
        r#"
seed = 3
[source]
mu = 0.5
[detectors]
efficiency = 0.45
dark_prob = 1e-4
[protocol]
pulses = 200000
"#,
    )?;

    let records = harness::transcript(&s, 40)?;
    println!("idx a_bit a_basis b_basis outcome sifted");
    for r in records.iter().filter(|r| r.outcome.clicked()) {
        println!(
            "{:3} {:5} {:7} {:7} {:>7} {}",
            r.index,
            r.alice_bit,
            r.alice_basis,
            r.bob_basis,
            r.outcome.label(),
            r.sifted
        );
    }
    let keys = sift(&records, s.source.rep_rate);
    println!("alice key {:?}\nbob key   {:?}", keys.alice, keys.bob);

    let report = harness::run(&s)?;
    let st = report.stats;
    println!(
        "\n{} pulses: {} sifted bits, raw rate {:.0} Hz (closed form {:.0} Hz), qber {:.4}",
        st.pulses_sent,
        st.sifted_bits,
        st.raw_rate,
        report.expected.raw_rate,
        st.qber.unwrap_or(f64::NAN)
    );
    Ok(())
}
