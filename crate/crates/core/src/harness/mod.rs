//! Scenario files, seeded runs, calibration, sweeps and CSV output.

mod calibrate;
pub mod output;
mod scenario;
mod sweep;

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

pub use calibrate::{calibrate, Calibration, CalibrationTargets, QberKnob, RateKnob};
pub use scenario::{
    load_scenario, Birefringence, Built, ComponentSpec, CustomLoopSection, DetectorSection, EntitySection,
    JonesSpec, LoopSection, PdlSpec, ProtocolSection, RingSection, Scenario, SourceSection, Topology,
};
pub use sweep::{parse_grid, sweep, Axis, SweepPoint, SweepResult};

use crate::bb84::{PulseRecord, SessionStats};
use crate::error::{Error, Result};
use crate::loopmodel::{timing_schedule, LoopModel, TimingSchedule};
use crate::session::{expected_session, run_session, run_transcript, SessionExpectation};

#[derive(Debug, Clone)]
pub struct RunReport {
    pub digest: String,
    pub seed: u64,
    /// Ring partner, if the scenario is a network.
    pub partner: Option<String>,
    pub stats: SessionStats,
    pub expected: SessionExpectation,
    /// `None` when one path carries no light.
    pub visibility: Option<f64>,
    pub timing: TimingSchedule,
    pub wall_clock: Duration,
}

impl Scenario {
    /// Copy with the ring partner replaced. Fails on non-ring scenarios and
    /// unknown ids.
    pub fn with_partner(&self, id: &str) -> Result<Scenario> {
        let mut s = self.clone();
        let Some(ring) = s.ring.as_mut() else {
            return Err(Error::Scenario("a partner can only be selected in a [ring] scenario".into()));
        };
        if !ring.entities.iter().any(|e| e.id == id) {
            return Err(Error::UnknownEntity(id.to_string()));
        }
        ring.partner = id.to_string();
        Ok(s)
    }

    fn partner(&self) -> Option<String> {
        self.ring.as_ref().map(|r| r.partner.clone())
    }
}

struct Prepared {
    model: LoopModel,
    protocol: crate::session::Protocol,
    timing: TimingSchedule,
}

fn prepare(s: &Scenario) -> Result<Prepared> {
    let built = s.build()?;
    let (cfg, protocol) = built.session_loop()?;
    let timing = timing_schedule(&cfg, built.group_index, built.gate_window_s)?;
    Ok(Prepared {
        model: LoopModel::new(&cfg)?,
        protocol,
        timing,
    })
}

/// Closed-form expectation only.
pub fn expected(s: &Scenario) -> Result<SessionExpectation> {
    let p = prepare(s)?;
    expected_session(&p.model, &p.protocol)
}

/// Monte Carlo session with `s.protocol.pulses` pulses under `s.seed`.
pub fn run(s: &Scenario) -> Result<RunReport> {
    let p = prepare(s)?;
    let start = Instant::now();
    let stats = run_session(&p.model, &p.protocol, s.seed, s.protocol.pulses)?;
    let wall_clock = start.elapsed();
    Ok(RunReport {
        digest: s.digest(),
        seed: s.seed,
        partner: s.partner(),
        stats,
        expected: expected_session(&p.model, &p.protocol)?,
        visibility: p.model.visibility().ok(),
        timing: p.timing,
        wall_clock,
    })
}

/// Per-pulse records of the first `pulses` pulses; they match the pulses of
/// [`run`] with the same seed.
pub fn transcript(s: &Scenario, pulses: u64) -> Result<Vec<PulseRecord>> {
    let p = prepare(s)?;
    run_transcript(&p.model, &p.protocol, s.seed, pulses)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringePoint {
    pub delta_phi: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Detection probabilities against the phase difference.
pub fn fringe(s: &Scenario, deltas: &[f64]) -> Result<Vec<FringePoint>> {
    let p = prepare(s)?;
    Ok(deltas
        .iter()
        .map(|&d| {
            let (p1, p2) = p.model.probs_at(d);
            FringePoint { delta_phi: d, p1, p2 }
        })
        .collect())
}

/// `n` evenly spaced phases over one period, starting at 0.
pub fn default_fringe_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}
