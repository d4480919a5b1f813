//! Pulse-by-pulse Monte Carlo of a BB84 session over a compiled loop, and the
//! closed-form expectation of the same session.
//!
//! Each pulse owns one stream of the `protocol` substream, indexed by pulse
//! number, and always consumes the same nine draws in the same order:
//! Alice bit, Alice basis, Bob basis, Eve attack, Eve basis, Eve outcome,
//! detector outcome, double-click assignment, disclosure. Phase disturbances
//! come from the separate `disturbance` substream.

use std::f64::consts::{PI, TAU};

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bb84::{
    alice_phase, bob_phase, decode, eve_from_draws, measure_zero_prob, phase_slot, DetectorMapping, EveConfig,
    PulseRecord, SessionStats, SiftTally,
};
use crate::channel::{
    click_probabilities, sample_unchecked, ClickOutcome, ClickProbs, DetectorParams, DoubleClickPolicy, SourceParams,
};
use crate::error::{Error, Result};
use crate::loopmodel::LoopModel;
use crate::rng::{StreamKey, Substream};

/// Random phase picked up on each pass through a disturbing module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Disturbance {
    /// Zero-mean Gaussian phase with standard deviation `sigma` (radians).
    Gaussian { sigma: f64 },
    /// Phase uniform on [0, 2π).
    Uniform,
}

impl Disturbance {
    pub fn validate(&self) -> Result<()> {
        if let Disturbance::Gaussian { sigma } = self {
            if !(*sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::param("disturbance.sigma", format!("must be >= 0, got {sigma}")));
            }
        }
        Ok(())
    }

    fn is_quiet(&self) -> bool {
        matches!(self, Disturbance::Gaussian { sigma } if *sigma == 0.0)
    }
}

/// Protocol and hardware parameters for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub source: SourceParams,
    pub detectors: DetectorParams,
    pub eve: EveConfig,
    /// Fraction of sifted bits revealed for the error estimate.
    pub disclosed_fraction: f64,
    pub mapping: DetectorMapping,
    /// One entry per disturbing module; each pulse passes each module once
    /// in each direction.
    pub disturbances: Vec<Disturbance>,
}

impl Protocol {
    pub fn new(source: SourceParams, detectors: DetectorParams) -> Self {
        Protocol {
            source,
            detectors,
            eve: EveConfig::default(),
            disclosed_fraction: 1.0,
            mapping: DetectorMapping::Standard,
            disturbances: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.detectors.validate()?;
        self.eve.validate()?;
        if !(self.disclosed_fraction > 0.0 && self.disclosed_fraction <= 1.0) {
            return Err(Error::param(
                "protocol.disclosed_fraction",
                format!("must be in (0, 1], got {}", self.disclosed_fraction),
            ));
        }
        for d in &self.disturbances {
            d.validate()?;
        }
        Ok(())
    }

    fn noisy(&self) -> bool {
        self.disturbances.iter().any(|d| !d.is_quiet())
    }
}

/// Precomputed per-session state.
struct Engine<'a> {
    model: &'a LoopModel,
    protocol: &'a Protocol,
    protocol_key: StreamKey,
    noise_key: StreamKey,
    // click distribution per (Alice phase slot, Bob basis) when no noise
    table: [[ClickProbs; 2]; 4],
    noisy: bool,
}

impl<'a> Engine<'a> {
    fn new(model: &'a LoopModel, protocol: &'a Protocol, seed: u64) -> Result<Self> {
        protocol.validate()?;
        let mut table = [[ClickProbs::new(1.0, 0.0, 0.0, 0.0); 2]; 4];
        for basis in 0..2u8 {
            for bit in 0..2u8 {
                for bb in 0..2u8 {
                    let (p1, p2) = model.probs_at(alice_phase(basis, bit) - bob_phase(bb));
                    table[phase_slot(basis, bit)][bb as usize] =
                        click_probabilities(p1, p2, &protocol.source, &protocol.detectors)?;
                }
            }
        }
        Ok(Engine {
            model,
            protocol,
            protocol_key: StreamKey::derive(seed, Substream::Protocol),
            noise_key: StreamKey::derive(seed, Substream::Disturbance),
            table,
            noisy: protocol.noisy(),
        })
    }

    fn pulse(&self, index: u64) -> PulseRecord {
        let p = self.protocol;
        let mut rng = self.protocol_key.stream(index);
        let u: [f64; 9] = std::array::from_fn(|_| rng.uniform());
        let bit_of = |x: f64| u8::from(x >= 0.5);
        let (alice_bit, alice_basis, bob_basis) = (bit_of(u[0]), bit_of(u[1]), bit_of(u[2]));
        let phi_a = alice_phase(alice_basis, alice_bit);
        let phi_b = bob_phase(bob_basis);
        let eve = eve_from_draws(phi_a, &p.eve, u[3], bit_of(u[4]), u[5]);

        let probs = if self.noisy {
            let mut noise = self.noise_key.stream(index);
            let mut shift = 0.0;
            for d in &p.disturbances {
                let (cw, ccw) = match d {
                    Disturbance::Gaussian { sigma } => {
                        let n = Normal::new(0.0, *sigma).expect("validated sigma");
                        (n.sample(&mut noise), n.sample(&mut noise))
                    }
                    Disturbance::Uniform => (TAU * noise.uniform(), TAU * noise.uniform()),
                };
                shift += cw - ccw;
            }
            let (p1, p2) = self.model.probs_at(eve.phi_out - phi_b + shift);
            click_probabilities(p1.min(1.0), p2.min(1.0 - p1.min(1.0)), &p.source, &p.detectors)
                .expect("validated parameters")
        } else {
            let slot = if eve.attacked {
                phase_slot(eve.basis, eve.bit)
            } else {
                phase_slot(alice_basis, alice_bit)
            };
            self.table[slot][bob_basis as usize]
        };

        let outcome = sample_unchecked(&probs, u[6]);
        let resolved = match (outcome, p.detectors.double_click_policy) {
            (ClickOutcome::Both, DoubleClickPolicy::RandomAssign) => {
                if u[7] < 0.5 {
                    ClickOutcome::D1
                } else {
                    ClickOutcome::D2
                }
            }
            (o, _) => o,
        };
        let single = matches!(resolved, ClickOutcome::D1 | ClickOutcome::D2);
        let sifted = single && alice_basis == bob_basis;
        let decoded_bit = if sifted {
            decode(resolved, bob_basis, p.mapping).expect("single click")
        } else {
            None
        };
        PulseRecord {
            index,
            alice_bit,
            alice_basis,
            bob_basis,
            phi_a,
            phi_b,
            phi_channel: eve.phi_out,
            eve_attacked: eve.attacked,
            outcome,
            resolved,
            sifted,
            decoded_bit,
            disclosed: u[8] < p.disclosed_fraction,
        }
    }
}

/// Simulate a single pulse; identical to the pulse of the same index inside
/// [`run_session`].
pub fn simulate_pulse(model: &LoopModel, protocol: &Protocol, seed: u64, index: u64) -> Result<PulseRecord> {
    Ok(Engine::new(model, protocol, seed)?.pulse(index))
}

/// Count-only Monte Carlo over `pulses` pulses. Pulse indices are sharded
/// across the rayon pool; the result does not depend on the sharding.
pub fn run_session(model: &LoopModel, protocol: &Protocol, seed: u64, pulses: u64) -> Result<SessionStats> {
    Ok(run_tally(model, protocol, seed, pulses)?.stats(protocol.source.rep_rate))
}

pub fn run_tally(model: &LoopModel, protocol: &Protocol, seed: u64, pulses: u64) -> Result<SiftTally> {
    let engine = Engine::new(model, protocol, seed)?;
    Ok((0..pulses)
        .into_par_iter()
        .fold(SiftTally::default, |t, i| t.add(&engine.pulse(i)))
        .reduce(SiftTally::default, SiftTally::merge))
}

/// Full per-pulse transcript, ordered by index.
pub fn run_transcript(model: &LoopModel, protocol: &Protocol, seed: u64, pulses: u64) -> Result<Vec<PulseRecord>> {
    let engine = Engine::new(model, protocol, seed)?;
    Ok((0..pulses).into_par_iter().map(|i| engine.pulse(i)).collect())
}

/// Closed-form per-pulse expectations of a session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SessionExpectation {
    /// Any detector fires.
    pub p_click: f64,
    pub p_double: f64,
    /// Sifted key bit produced.
    pub p_sift: f64,
    /// Sifted key bit produced and wrong.
    pub p_error: f64,
    /// `rep_rate × p_sift`.
    pub raw_rate: f64,
    pub qber: Option<f64>,
}

/// Exact expectation over uniform basis/bit choices, Eve's mixture and the
/// phase-disturbance distribution.
pub fn expected_session(model: &LoopModel, protocol: &Protocol) -> Result<SessionExpectation> {
    protocol.validate()?;
    let f = protocol.eve.effective_fraction();
    let nodes = noise_nodes(&protocol.disturbances);
    let (mut p_click, mut p_double, mut p_sift, mut p_error) = (0.0, 0.0, 0.0, 0.0);

    for basis in 0..2u8 {
        for bit in 0..2u8 {
            let phi = alice_phase(basis, bit);
            // distribution of the phase reaching Bob
            let mut sent = vec![(1.0 - f, phi)];
            if f > 0.0 {
                for eb in 0..2u8 {
                    let z = measure_zero_prob(phi, eb);
                    sent.push((f * 0.5 * z, alice_phase(eb, 0)));
                    sent.push((f * 0.5 * (1.0 - z), alice_phase(eb, 1)));
                }
            }
            for bb in 0..2u8 {
                let w_case = 0.125;
                let mut q = [0.0; 4];
                for &(w_phase, phase) in sent.iter().filter(|(w, _)| *w > 0.0) {
                    for &(w_noise, shift) in &nodes {
                        let (p1, p2) = model.probs_at(phase - bob_phase(bb) + shift);
                        let c = click_probabilities(p1.min(1.0), p2.min(1.0 - p1.min(1.0)), &protocol.source, &protocol.detectors)?;
                        for (acc, x) in q.iter_mut().zip(c.as_array()) {
                            *acc += w_phase * w_noise * x;
                        }
                    }
                }
                let [_, d1, d2, both] = q;
                p_click += w_case * (d1 + d2 + both);
                p_double += w_case * both;
                if basis != bb {
                    continue;
                }
                let (s1, s2) = match protocol.detectors.double_click_policy {
                    DoubleClickPolicy::Discard => (d1, d2),
                    DoubleClickPolicy::RandomAssign => (d1 + both / 2.0, d2 + both / 2.0),
                };
                // detector whose bit disagrees with Alice's
                let zero_is_d1 = protocol.mapping == DetectorMapping::Standard;
                let wrong = if (bit == 0) == zero_is_d1 { s2 } else { s1 };
                p_sift += w_case * (s1 + s2);
                p_error += w_case * wrong;
            }
        }
    }
    Ok(SessionExpectation {
        p_click,
        p_double,
        p_sift,
        p_error,
        raw_rate: protocol.source.rep_rate * p_sift,
        qber: (p_sift > 0.0).then(|| p_error / p_sift),
    })
}

/// Quadrature nodes `(weight, shift)` for the net phase shift
/// `Σ (δ_cw − δ_ccw)` added by disturbing modules.
fn noise_nodes(disturbances: &[Disturbance]) -> Vec<(f64, f64)> {
    if disturbances.iter().any(|d| matches!(d, Disturbance::Uniform)) {
        return circle_nodes(|_| 1.0 / TAU);
    }
    let var: f64 = disturbances
        .iter()
        .map(|d| match d {
            Disturbance::Gaussian { sigma } => 2.0 * sigma * sigma,
            Disturbance::Uniform => unreachable!(),
        })
        .sum();
    if var == 0.0 {
        return vec![(1.0, 0.0)];
    }
    let s = var.sqrt();
    let pdf = |x: f64| (-0.5 * (x / s).powi(2)).exp() / (s * (TAU).sqrt());
    if s < 1.0 {
        // Simpson on ±10 s
        let n = 2000;
        let h = 20.0 * s / n as f64;
        (0..=n)
            .map(|k| {
                let x = -10.0 * s + k as f64 * h;
                let c = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                (c * h / 3.0 * pdf(x), x)
            })
            .collect()
    } else {
        // wrapped normal on the circle
        circle_nodes(|x| (-12..=12).map(|k| pdf(x + TAU * k as f64)).sum())
    }
}

fn circle_nodes(density: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    let n = 720;
    let h = TAU / n as f64;
    (0..n)
        .map(|k| {
            let x = -PI + k as f64 * h;
            (h * density(x), x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bb84::{sift, EveConfig};
    use crate::jones::{JonesOperator, JonesState};
    use crate::loopmodel::testutil::ideal_loop;
    use crate::loopmodel::Component;

    fn ideal_model() -> LoopModel {
        LoopModel::new(&ideal_loop(200.0, 800.0, 0.0)).unwrap()
    }

    fn protocol(mu: f64, eff: f64, dark: f64) -> Protocol {
        Protocol::new(
            SourceParams {
                mu,
                ..Default::default()
            },
            DetectorParams {
                efficiency: eff,
                dark_prob: dark,
                ..Default::default()
            },
        )
    }

    fn misaligned_model(theta: f64) -> LoopModel {
        let mut cfg = ideal_loop(200.0, 800.0, 0.0);
        cfg.components[0] = Component::PolController {
            jones: JonesOperator::rotation(theta),
        };
        LoopModel::new(&cfg).unwrap()
    }

    #[test]
    fn ideal_expectation_closed_form() {
        let e = expected_session(&ideal_model(), &protocol(0.1, 1.0, 0.0)).unwrap();
        let want = 0.5 * (1.0 - (-0.1f64).exp());
        assert!((e.p_sift - want).abs() < 1e-15);
        assert!((e.p_sift - 0.047581).abs() < 1e-6);
        assert_eq!(e.qber, Some(0.0));
        assert!((e.raw_rate - 100e3 * want).abs() < 1e-9);
    }

    #[test]
    fn darks_only_give_half_qber() {
        let e = expected_session(&ideal_model(), &protocol(0.0, 1.0, 1e-3)).unwrap();
        assert!((e.qber.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_light_no_darks_undefined_qber() {
        let e = expected_session(&ideal_model(), &protocol(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(e.p_sift, 0.0);
        assert!(e.qber.is_none());
    }

    #[test]
    fn matched_ideal_decodes_alice_bit() {
        let m = ideal_model();
        let p = protocol(2.0, 1.0, 0.0);
        let recs = run_transcript(&m, &p, 3, 20_000).unwrap();
        let mut matched = 0;
        for r in &recs {
            if r.sifted {
                matched += 1;
                assert_eq!(r.decoded_bit, Some(r.alice_bit));
            }
        }
        assert!(matched > 5000);
    }

    #[test]
    fn mismatched_bases_are_uncorrelated() {
        let m = ideal_model();
        let p = protocol(0.5, 1.0, 0.0);
        let recs = run_transcript(&m, &p, 4, 100_000).unwrap();
        let mut n = 0u32;
        let mut agree = 0u32;
        for r in recs.iter().filter(|r| r.alice_basis != r.bob_basis) {
            if let ClickOutcome::D1 | ClickOutcome::D2 = r.resolved {
                n += 1;
                let bit = decode(r.resolved, r.bob_basis, DetectorMapping::Standard).unwrap().unwrap();
                agree += u32::from(bit == r.alice_bit);
            }
        }
        let f = agree as f64 / n as f64;
        let sd = (0.25 / n as f64).sqrt();
        assert!((f - 0.5).abs() < 3.0 * sd, "{f} over {n}");
    }

    #[test]
    fn stats_match_transcript_sift() {
        let m = misaligned_model(0.2);
        let mut p = protocol(0.3, 0.6, 1e-3);
        p.disclosed_fraction = 0.4;
        let recs = run_transcript(&m, &p, 9, 50_000).unwrap();
        let from_records = sift(&recs, p.source.rep_rate).stats;
        let counted = run_session(&m, &p, 9, 50_000).unwrap();
        assert_eq!(from_records, counted);
        assert!(counted.sample_bits < counted.sifted_bits);
    }

    #[test]
    fn single_pulse_reproducible() {
        let m = misaligned_model(0.1);
        let p = protocol(0.3, 0.6, 1e-3);
        let recs = run_transcript(&m, &p, 21, 100).unwrap();
        assert_eq!(simulate_pulse(&m, &p, 21, 57).unwrap(), recs[57]);
    }

    #[test]
    fn eve_fraction_zero_matches_no_eve() {
        let m = ideal_model();
        let p = protocol(0.2, 1.0, 1e-4);
        let mut q = p.clone();
        q.eve = EveConfig::intercept_resend(0.0);
        assert_eq!(run_transcript(&m, &p, 5, 5000).unwrap(), run_transcript(&m, &q, 5, 5000).unwrap());
    }

    #[test]
    fn misalignment_qber_tracks_visibility() {
        for theta in [0.05, 0.1, 0.2] {
            let m = misaligned_model(theta);
            let v = m.visibility().unwrap();
            assert!((v - (2.0 * theta).cos()).abs() < 1e-12);
            let p = protocol(0.1, 1.0, 0.0);
            let s = run_session(&m, &p, 8, 400_000).unwrap();
            let q = s.qber.unwrap();
            let want = (1.0 - v) / 2.0;
            let sd = (want * (1.0 - want) / s.sifted_bits as f64).sqrt();
            assert!((q - want).abs() < 3.0 * sd, "theta={theta} qber={q} want={want}");
        }
    }

    #[test]
    fn qber_composition_formula() {
        // QBER ≈ [½(1−V) p_sig + ½ p_dark] / [p_sig + p_dark] for weak light and rare darks
        for (theta, mu, dark) in [(0.1, 0.1, 1e-5), (0.25, 0.05, 1e-4), (0.0, 0.1, 5e-5)] {
            let m = misaligned_model(theta);
            let v = m.visibility().unwrap();
            let p = protocol(mu, 0.5, dark);
            let e = expected_session(&m, &p).unwrap();
            let p_sig = 0.5 * (1.0 - (-mu * 0.5f64).exp());
            let p_dark = 0.5 * 2.0 * dark;
            let approx = (0.5 * (1.0 - v) * p_sig + 0.5 * p_dark) / (p_sig + p_dark);
            assert!((e.qber.unwrap() - approx).abs() < 2e-3, "{} vs {approx}", e.qber.unwrap());
        }
    }

    #[test]
    fn random_assign_counts_double_clicks() {
        let m = ideal_model();
        let mut p = protocol(3.0, 1.0, 0.05);
        let discard = expected_session(&m, &p).unwrap();
        p.detectors.double_click_policy = DoubleClickPolicy::RandomAssign;
        let assign = expected_session(&m, &p).unwrap();
        assert!(assign.p_sift > discard.p_sift);
        let s = run_session(&m, &p, 2, 200_000).unwrap();
        let sd = (assign.p_sift * (1.0 - assign.p_sift) / 2e5).sqrt();
        assert!((s.sifted_bits as f64 / 2e5 - assign.p_sift).abs() < 3.0 * sd);
    }

    #[test]
    fn swapped_mapping_inverts_bits() {
        let m = ideal_model();
        let mut p = protocol(0.1, 1.0, 0.0);
        p.mapping = DetectorMapping::Swapped;
        assert!((expected_session(&m, &p).unwrap().qber.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_noise_expectation_small_mu_limit() {
        let m = ideal_model();
        for sigma in [0.1, 0.5, std::f64::consts::FRAC_PI_2, 3.0] {
            let mut p = protocol(1e-4, 1.0, 0.0);
            p.disturbances = vec![Disturbance::Gaussian { sigma }];
            let e = expected_session(&m, &p).unwrap();
            let want = 0.5 * (1.0 - (-sigma * sigma).exp());
            assert!((e.qber.unwrap() - want).abs() < 1e-4, "sigma={sigma}: {} vs {want}", e.qber.unwrap());
        }
    }

    #[test]
    fn uniform_noise_gives_half() {
        let m = ideal_model();
        let mut p = protocol(0.1, 1.0, 0.0);
        p.disturbances = vec![Disturbance::Gaussian { sigma: 0.0 }, Disturbance::Uniform];
        let e = expected_session(&m, &p).unwrap();
        assert!((e.qber.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quiet_disturbance_matches_none() {
        let m = ideal_model();
        let p = protocol(0.1, 1.0, 1e-4);
        let mut q = p.clone();
        q.disturbances = vec![Disturbance::Gaussian { sigma: 0.0 }];
        assert_eq!(run_session(&m, &p, 1, 10_000).unwrap(), run_session(&m, &q, 1, 10_000).unwrap());
    }

    #[test]
    fn rejects_bad_disclosed_fraction() {
        let mut p = protocol(0.1, 1.0, 0.0);
        p.disclosed_fraction = 0.0;
        assert!(run_session(&ideal_model(), &p, 1, 10).is_err());
    }

    #[test]
    fn source_polarization_does_not_matter_for_ideal_loop() {
        let mut cfg = ideal_loop(200.0, 800.0, 0.0);
        cfg.source_pol = JonesState::linear(0.7);
        let m = LoopModel::new(&cfg).unwrap();
        let e = expected_session(&m, &protocol(0.1, 1.0, 0.0)).unwrap();
        assert_eq!(e.qber, Some(0.0));
    }
}
