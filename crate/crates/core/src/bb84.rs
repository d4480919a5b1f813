//! Phase-coded BB84: random choices, decoding, sifting and an
//! intercept-resend eavesdropper.
//!
//! Phase table (Δφ = φ_A − φ_B selects the detector):
//!
//! | basis | Alice bit 0 | Alice bit 1 | Bob |
//! |-------|-------------|-------------|-----|
//! | 0     | 0           | π           | 0   |
//! | 1     | π/2         | 3π/2        | π/2 |
//!
//! Matched bases give Δφ ∈ {0, π}; mismatched bases give Δφ = ±π/2.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::channel::ClickOutcome;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Alice's modulator phase for `(basis, bit)`.
pub fn alice_phase(basis: u8, bit: u8) -> f64 {
    FRAC_PI_2 * basis as f64 + PI * bit as f64
}

/// Bob's modulator phase for `basis`.
pub fn bob_phase(basis: u8) -> f64 {
    FRAC_PI_2 * basis as f64
}

/// Index of Alice's phase in `{0, π/2, π, 3π/2}`.
pub(crate) fn phase_slot(basis: u8, bit: u8) -> usize {
    (basis + 2 * bit) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliceChoice {
    pub bit: u8,
    pub basis: u8,
    pub phi_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BobChoice {
    pub basis: u8,
    pub phi_b: f64,
}

impl AliceChoice {
    pub fn new(bit: u8, basis: u8) -> Self {
        AliceChoice {
            bit,
            basis,
            phi_a: alice_phase(basis, bit),
        }
    }
}

impl BobChoice {
    pub fn new(basis: u8) -> Self {
        BobChoice {
            basis,
            phi_b: bob_phase(basis),
        }
    }
}

/// Uniform bit then uniform basis; two draws.
pub fn alice_choose(rng: &mut RngStream) -> AliceChoice {
    let bit = rng.bit();
    let basis = rng.bit();
    AliceChoice::new(bit, basis)
}

pub fn bob_choose(rng: &mut RngStream) -> BobChoice {
    BobChoice::new(rng.bit())
}

/// Which detector reports bit 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMapping {
    /// APD1 → 0, APD2 → 1.
    #[default]
    Standard,
    /// APD1 → 1, APD2 → 0.
    Swapped,
}

/// Bit announced by a (policy-resolved) click; `None` for no click.
pub fn decode(outcome: ClickOutcome, _bob_basis: u8, mapping: DetectorMapping) -> Result<Option<u8>> {
    let bit = match outcome {
        ClickOutcome::None => return Ok(None),
        ClickOutcome::D1 => 0,
        ClickOutcome::D2 => 1,
        ClickOutcome::Both => return Err(Error::UnresolvedDoubleClick),
    };
    Ok(Some(match mapping {
        DetectorMapping::Standard => bit,
        DetectorMapping::Swapped => 1 - bit,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveStrategy {
    #[default]
    Off,
    InterceptResend,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EveConfig {
    #[serde(default)]
    pub strategy: EveStrategy,
    /// Fraction of pulses attacked.
    #[serde(default)]
    pub fraction: f64,
}

impl EveConfig {
    pub fn intercept_resend(fraction: f64) -> Self {
        EveConfig {
            strategy: EveStrategy::InterceptResend,
            fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::param("eve.fraction", format!("must be in [0, 1], got {}", self.fraction)));
        }
        Ok(())
    }

    /// Attack probability actually applied.
    pub fn effective_fraction(&self) -> f64 {
        match self.strategy {
            EveStrategy::Off => 0.0,
            EveStrategy::InterceptResend => self.fraction,
        }
    }
}

/// What Eve did to one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveAction {
    pub attacked: bool,
    pub basis: u8,
    pub bit: u8,
    /// Phase carried on toward Bob.
    pub phi_out: f64,
}

/// Probability that a measurement in `basis` reads 0 for a pulse at `phi`.
pub fn measure_zero_prob(phi: f64, basis: u8) -> f64 {
    ((phi - bob_phase(basis)) / 2.0).cos().powi(2)
}

/// Intercept-resend on one pulse. Always consumes three draws (attack, basis,
/// outcome) so enabling Eve never shifts any other draw.
pub fn eve_transform(phi_a: f64, eve: &EveConfig, rng: &mut RngStream) -> EveAction {
    let u_attack = rng.uniform();
    let basis = rng.bit();
    let u_outcome = rng.uniform();
    eve_from_draws(phi_a, eve, u_attack, basis, u_outcome)
}

pub(crate) fn eve_from_draws(phi_a: f64, eve: &EveConfig, u_attack: f64, basis: u8, u_outcome: f64) -> EveAction {
    if u_attack >= eve.effective_fraction() {
        return EveAction {
            attacked: false,
            basis,
            bit: 0,
            phi_out: phi_a,
        };
    }
    let bit = u8::from(u_outcome >= measure_zero_prob(phi_a, basis));
    EveAction {
        attacked: true,
        basis,
        bit,
        phi_out: alice_phase(basis, bit),
    }
}

/// Everything recorded about one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub index: u64,
    pub alice_bit: u8,
    pub alice_basis: u8,
    pub bob_basis: u8,
    pub phi_a: f64,
    pub phi_b: f64,
    /// Phase that reached Bob (differs from `phi_a` only after an attack).
    pub phi_channel: f64,
    pub eve_attacked: bool,
    /// Raw detector outcome.
    pub outcome: ClickOutcome,
    /// Outcome after the double-click policy.
    pub resolved: ClickOutcome,
    pub sifted: bool,
    pub decoded_bit: Option<u8>,
    /// Bit revealed for error estimation.
    pub disclosed: bool,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> Option<(f64, f64)> {
    if n == 0 {
        return None;
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Some(((centre - half).max(0.0), (centre + half).min(1.0)))
}

/// Session summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionStats {
    pub pulses_sent: u64,
    /// Pulses with at least one detector click (before any policy).
    pub raw_clicks: u64,
    pub double_clicks: u64,
    pub sifted_bits: u64,
    /// Sifted bits where Bob's bit differs from Alice's.
    pub errors: u64,
    /// Sifted bits used for the error estimate.
    pub sample_bits: u64,
    pub sample_errors: u64,
    pub duration_s: f64,
    /// Sifted key bits per second.
    pub raw_rate: f64,
    /// `None` when nothing was sampled.
    pub qber: Option<f64>,
    pub qber_interval: Option<(f64, f64)>,
}

/// Order-independent counts; merging is plain addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SiftTally {
    pub pulses: u64,
    pub raw_clicks: u64,
    pub double_clicks: u64,
    pub sifted: u64,
    pub errors: u64,
    pub sample_bits: u64,
    pub sample_errors: u64,
}

impl SiftTally {
    pub fn add(mut self, r: &PulseRecord) -> Self {
        self.pulses += 1;
        self.raw_clicks += u64::from(r.outcome.clicked());
        self.double_clicks += u64::from(r.outcome == ClickOutcome::Both);
        if r.sifted {
            let wrong = r.decoded_bit != Some(r.alice_bit);
            self.sifted += 1;
            self.errors += u64::from(wrong);
            if r.disclosed {
                self.sample_bits += 1;
                self.sample_errors += u64::from(wrong);
            }
        }
        self
    }

    pub fn merge(self, o: SiftTally) -> Self {
        SiftTally {
            pulses: self.pulses + o.pulses,
            raw_clicks: self.raw_clicks + o.raw_clicks,
            double_clicks: self.double_clicks + o.double_clicks,
            sifted: self.sifted + o.sifted,
            errors: self.errors + o.errors,
            sample_bits: self.sample_bits + o.sample_bits,
            sample_errors: self.sample_errors + o.sample_errors,
        }
    }

    pub fn stats(&self, rep_rate: f64) -> SessionStats {
        let duration_s = self.pulses as f64 / rep_rate;
        let qber = (self.sample_bits > 0).then(|| self.sample_errors as f64 / self.sample_bits as f64);
        SessionStats {
            pulses_sent: self.pulses,
            raw_clicks: self.raw_clicks,
            double_clicks: self.double_clicks,
            sifted_bits: self.sifted,
            errors: self.errors,
            sample_bits: self.sample_bits,
            sample_errors: self.sample_errors,
            duration_s,
            raw_rate: if duration_s > 0.0 {
                self.sifted as f64 / duration_s
            } else {
                0.0
            },
            qber,
            qber_interval: wilson_interval(self.sample_errors, self.sample_bits, Z95),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiftedKeys {
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
    pub stats: SessionStats,
}

/// Basis reconciliation over a complete session transcript.
pub fn sift(records: &[PulseRecord], rep_rate: f64) -> SiftedKeys {
    let mut alice = Vec::new();
    let mut bob = Vec::new();
    let mut tally = SiftTally::default();
    for r in records {
        tally = tally.add(r);
        if let (true, Some(b)) = (r.sifted, r.decoded_bit) {
            alice.push(r.alice_bit);
            bob.push(b);
        }
    }
    SiftedKeys {
        alice,
        bob,
        stats: tally.stats(rep_rate),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Substream;

    #[test]
    fn phase_table_rows() {
        assert_eq!(AliceChoice::new(0, 0).phi_a, 0.0);
        assert!((AliceChoice::new(1, 1).phi_a - 3.0 * PI / 2.0).abs() < 1e-15);
        assert!((AliceChoice::new(0, 1).phi_a - PI / 2.0).abs() < 1e-15);
        assert!((AliceChoice::new(1, 0).phi_a - PI).abs() < 1e-15);
        assert_eq!(BobChoice::new(0).phi_b, 0.0);
        assert!((BobChoice::new(1).phi_b - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn matched_and_mismatched_deltas() {
        for basis in 0..2 {
            for bit in 0..2 {
                for bb in 0..2 {
                    let d = (alice_phase(basis, bit) - bob_phase(bb)).rem_euclid(2.0 * PI);
                    if basis == bb {
                        assert!((d - PI * bit as f64).abs() < 1e-12);
                    } else {
                        assert!((d - PI / 2.0).abs() < 1e-12 || (d - 3.0 * PI / 2.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn choices_are_uniform() {
        let mut counts = [[0u32; 2]; 2];
        for i in 0..100_000 {
            let mut r = RngStream::substream(5, Substream::Protocol, i);
            let a = alice_choose(&mut r);
            counts[a.bit as usize][a.basis as usize] += 1;
        }
        for row in counts {
            for c in row {
                assert!((c as f64 / 1e5 - 0.25).abs() < 0.01, "{counts:?}");
            }
        }
    }

    #[test]
    fn decode_mapping() {
        let m = DetectorMapping::Standard;
        assert_eq!(decode(ClickOutcome::D1, 0, m).unwrap(), Some(0));
        assert_eq!(decode(ClickOutcome::D2, 0, m).unwrap(), Some(1));
        assert_eq!(decode(ClickOutcome::None, 1, m).unwrap(), None);
        assert!(matches!(decode(ClickOutcome::Both, 0, m), Err(Error::UnresolvedDoubleClick)));
        assert_eq!(decode(ClickOutcome::D1, 0, DetectorMapping::Swapped).unwrap(), Some(1));
    }

    #[test]
    fn eve_off_passes_through() {
        let eve = EveConfig::default();
        let mut r = RngStream::new(1);
        for _ in 0..1000 {
            let a = eve_transform(1.0, &eve, &mut r);
            assert!(!a.attacked);
            assert_eq!(a.phi_out, 1.0);
        }
    }

    #[test]
    fn eve_matched_basis_reads_correctly() {
        let eve = EveConfig::intercept_resend(1.0);
        for basis in 0..2 {
            for bit in 0..2 {
                for u in [1e-9, 0.3, 0.999] {
                    let a = eve_from_draws(alice_phase(basis, bit), &eve, 0.0, basis, u);
                    assert!(a.attacked);
                    assert_eq!(a.bit, bit);
                    assert!((a.phi_out - alice_phase(basis, bit)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eve_mismatched_basis_is_coin_flip() {
        assert!((measure_zero_prob(alice_phase(0, 0), 1) - 0.5).abs() < 1e-12);
        assert!((measure_zero_prob(alice_phase(1, 1), 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(540, 10_000, Z95).unwrap();
        assert!(lo < 0.054 && 0.054 < hi);
        assert!(hi < 0.11);
        let (lo, _) = wilson_interval(2500, 10_000, Z95).unwrap();
        assert!(lo > 0.11);
        let (lo, hi) = wilson_interval(0, 100, Z95).unwrap();
        assert!(lo < 1e-12);
        assert!(hi > 0.0);
        assert!(wilson_interval(0, 0, Z95).is_none());
    }

    fn record(i: u64, alice_bit: u8, ab: u8, bb: u8, outcome: ClickOutcome) -> PulseRecord {
        let sifted = ab == bb && matches!(outcome, ClickOutcome::D1 | ClickOutcome::D2);
        PulseRecord {
            index: i,
            alice_bit,
            alice_basis: ab,
            bob_basis: bb,
            phi_a: alice_phase(ab, alice_bit),
            phi_b: bob_phase(bb),
            phi_channel: alice_phase(ab, alice_bit),
            eve_attacked: false,
            outcome,
            resolved: outcome,
            sifted,
            decoded_bit: if sifted {
                decode(outcome, bb, DetectorMapping::Standard).unwrap()
            } else {
                None
            },
            disclosed: true,
        }
    }

    #[test]
    fn sift_keeps_matched_single_clicks() {
        let recs = vec![
            record(0, 0, 0, 0, ClickOutcome::D1),
            record(1, 1, 1, 1, ClickOutcome::D2),
            record(2, 1, 0, 1, ClickOutcome::D1),
            record(3, 0, 0, 0, ClickOutcome::None),
            record(4, 0, 1, 1, ClickOutcome::D2),
        ];
        let k = sift(&recs, 100e3);
        assert_eq!(k.alice, vec![0, 1, 0]);
        assert_eq!(k.bob, vec![0, 1, 1]);
        assert_eq!(k.stats.sifted_bits, 3);
        assert_eq!(k.stats.errors, 1);
        assert_eq!(k.stats.raw_clicks, 4);
        assert!((k.stats.qber.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((k.stats.raw_rate - 3.0 / (5.0 / 100e3)).abs() < 1e-9);
    }

    #[test]
    fn sift_with_nothing_sifted_flags_undefined_qber() {
        let recs = vec![record(0, 0, 0, 1, ClickOutcome::D1)];
        let k = sift(&recs, 100e3);
        assert_eq!(k.stats.sifted_bits, 0);
        assert!(k.stats.qber.is_none());
        assert!(k.stats.qber_interval.is_none());
    }

    #[test]
    fn tally_merge_is_order_independent() {
        let recs: Vec<_> = (0..50)
            .map(|i| record(i, (i % 2) as u8, (i % 3 % 2) as u8, (i % 5 % 2) as u8, ClickOutcome::D1))
            .collect();
        let whole = recs.iter().fold(SiftTally::default(), |t, r| t.add(r));
        let (a, b) = recs.split_at(17);
        let left = a.iter().fold(SiftTally::default(), |t, r| t.add(r));
        let right = b.iter().fold(SiftTally::default(), |t, r| t.add(r));
        assert_eq!(whole, right.merge(left));
    }
}
