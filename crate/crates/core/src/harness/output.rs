//! CSV emission. Every table carries a `schema` column; floats are written
//! with 9 significant digits so output is byte-stable across runs.

use std::io::Write;

use super::{Calibration, FringePoint, RunReport, SweepResult};
use crate::bb84::PulseRecord;
use crate::error::Result;

pub const SCHEMA_VERSION: &str = "1";

fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

const RUN_HEADER: [&str; 19] = [
    "schema",
    "digest",
    "seed",
    "partner",
    "pulses",
    "raw_clicks",
    "double_clicks",
    "sifted_bits",
    "errors",
    "sample_bits",
    "sample_errors",
    "raw_rate_hz",
    "qber",
    "qber_lo95",
    "qber_hi95",
    "expected_raw_rate_hz",
    "expected_qber",
    "visibility",
    "timing_conflict",
];

fn run_fields(r: &RunReport) -> Vec<String> {
    let s = &r.stats;
    vec![
        SCHEMA_VERSION.to_string(),
        r.digest.clone(),
        r.seed.to_string(),
        r.partner.clone().unwrap_or_default(),
        s.pulses_sent.to_string(),
        s.raw_clicks.to_string(),
        s.double_clicks.to_string(),
        s.sifted_bits.to_string(),
        s.errors.to_string(),
        s.sample_bits.to_string(),
        s.sample_errors.to_string(),
        num(s.raw_rate),
        opt(s.qber),
        opt(s.qber_interval.map(|i| i.0)),
        opt(s.qber_interval.map(|i| i.1)),
        num(r.expected.raw_rate),
        opt(r.expected.qber),
        opt(r.visibility),
        r.timing.conflict.to_string(),
    ]
}

pub fn write_run<W: Write>(r: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_HEADER)?;
    w.write_record(run_fields(r))?;
    w.flush()?;
    Ok(())
}

pub fn write_fringe<W: Write>(points: &[FringePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["schema", "delta_phi", "p1", "p2"])?;
    for p in points {
        w.write_record([SCHEMA_VERSION.to_string(), num(p.delta_phi), num(p.p1), num(p.p2)])?;
    }
    w.flush()?;
    Ok(())
}

/// Session sweeps get the run columns prefixed by `axis,value`.
pub fn write_sweep<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    match result {
        SweepResult::Fringe(points) => write_fringe(points, out),
        SweepResult::Sessions { axis, points } => {
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec!["axis", "value"];
            header.extend(RUN_HEADER);
            w.write_record(&header)?;
            for p in points {
                let mut row = vec![axis.name().to_string(), num(p.value)];
                row.extend(run_fields(&p.report));
                w.write_record(&row)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn write_transcript<W: Write>(records: &[PulseRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "schema",
        "index",
        "alice_bit",
        "alice_basis",
        "bob_basis",
        "phi_a",
        "phi_b",
        "phi_channel",
        "eve_attacked",
        "outcome",
        "resolved",
        "sifted",
        "decoded_bit",
        "disclosed",
    ])?;
    for r in records {
        w.write_record([
            SCHEMA_VERSION.to_string(),
            r.index.to_string(),
            r.alice_bit.to_string(),
            r.alice_basis.to_string(),
            r.bob_basis.to_string(),
            num(r.phi_a),
            num(r.phi_b),
            num(r.phi_channel),
            r.eve_attacked.to_string(),
            r.outcome.label().to_string(),
            r.resolved.label().to_string(),
            r.sifted.to_string(),
            r.decoded_bit.map(|b| b.to_string()).unwrap_or_default(),
            r.disclosed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fitted scenario as TOML, headed by a comment with the fit summary.
pub fn calibrated_toml(c: &Calibration) -> String {
    let mut text = format!(
        "# fitted: raw rate {} Hz, qber {}, visibility {}\n",
        num(c.expected.raw_rate),
        opt(c.expected.qber),
        opt(c.visibility),
    );
    text.push_str(&c.scenario.to_toml_string());
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{default_fringe_grid, fringe, run, transcript, Scenario};

    #[test]
    fn run_csv_is_deterministic() {
        let mut s = Scenario::default();
        s.protocol.pulses = 10_000;
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_run(&run(&s).unwrap(), &mut a).unwrap();
        write_run(&run(&s).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("schema,digest,seed"));
        assert!(lines.next().unwrap().starts_with("1,"));
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(1200.0), "1.20000000e3");
        assert_eq!(num(0.054), "5.40000000e-2");
    }

    #[test]
    fn fringe_and_transcript_tables() {
        let s = Scenario::default();
        let mut out = Vec::new();
        write_fringe(&fringe(&s, &default_fringe_grid(4)).unwrap(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 5);
        let mut out = Vec::new();
        write_transcript(&transcript(&s, 10).unwrap(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.lines().nth(1).unwrap().starts_with("1,0,"));
    }
}
