//! Deterministic optics of the circular (Sagnac-type) loop.
//!
//! A pulse from Bob's source splits at the coupler. One half runs the component
//! list in order (clockwise, CW), the other runs it in reverse (counter-clockwise,
//! CCW), seeing the transpose of every element. Alice's modulator acts on the CW
//! pulse and Bob's on the CCW pulse; the two recombine at the coupler and exit
//! toward APD1 (back through the circulator) or APD2.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jones::{backward, compose, JonesOperator, JonesState};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_GROUP_INDEX: f64 = 1.468;
pub const DEFAULT_LOSS_DB_PER_KM: f64 = 2.0;
/// Phase-modulator gate width used for the overlap check.
pub const DEFAULT_GATE_WINDOW_S: f64 = 10e-9;

const UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Alice,
    Bob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Cw,
    Ccw,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Cw => "cw",
            Direction::Ccw => "ccw",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Fiber,
    DelayFiber,
    PhaseModulator,
    PolController,
    Attenuator,
    PdlElement,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::Fiber => "fiber",
            ComponentKind::DelayFiber => "delay_fiber",
            ComponentKind::PhaseModulator => "phase_modulator",
            ComponentKind::PolController => "pol_controller",
            ComponentKind::Attenuator => "attenuator",
            ComponentKind::PdlElement => "pdl_element",
        })
    }
}

/// One element of the loop.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Fiber {
        length_m: f64,
        loss_db_per_km: f64,
        jones: JonesOperator,
    },
    DelayFiber {
        length_m: f64,
        loss_db_per_km: f64,
        jones: JonesOperator,
    },
    /// Scalar phase; the per-pulse shift is supplied at detection time.
    PhaseModulator { owner: Owner },
    PolController { jones: JonesOperator },
    /// Power transmittance in (0, 1].
    Attenuator { transmittance: f64 },
    /// Diattenuator with amplitude transmittances `t_max ≥ t_min` along and
    /// across `axis`. Equal values give isotropic insertion loss.
    PdlElement { t_max: f64, t_min: f64, axis: f64 },
}

impl Component {
    pub fn fiber(length_m: f64, loss_db_per_km: f64) -> Self {
        Component::Fiber {
            length_m,
            loss_db_per_km,
            jones: JonesOperator::identity(),
        }
    }

    pub fn delay(length_m: f64, loss_db_per_km: f64) -> Self {
        Component::DelayFiber {
            length_m,
            loss_db_per_km,
            jones: JonesOperator::identity(),
        }
    }

    pub fn kind(&self) -> ComponentKind {
        match self {
            Component::Fiber { .. } => ComponentKind::Fiber,
            Component::DelayFiber { .. } => ComponentKind::DelayFiber,
            Component::PhaseModulator { .. } => ComponentKind::PhaseModulator,
            Component::PolController { .. } => ComponentKind::PolController,
            Component::Attenuator { .. } => ComponentKind::Attenuator,
            Component::PdlElement { .. } => ComponentKind::PdlElement,
        }
    }

    /// Physical length; zero for lumped elements.
    pub fn length_m(&self) -> f64 {
        match self {
            Component::Fiber { length_m, .. } | Component::DelayFiber { length_m, .. } => *length_m,
            _ => 0.0,
        }
    }

    /// Polarization-independent power transmittance.
    pub fn power_transmittance(&self) -> f64 {
        match self {
            Component::Fiber {
                length_m,
                loss_db_per_km,
                ..
            }
            | Component::DelayFiber {
                length_m,
                loss_db_per_km,
                ..
            } => 10f64.powf(-loss_db_per_km * length_m / 1000.0 / 10.0),
            Component::Attenuator { transmittance } => *transmittance,
            Component::PdlElement { t_max, .. } => t_max * t_max,
            Component::PhaseModulator { .. } | Component::PolController { .. } => 1.0,
        }
    }

    /// Forward Jones operator with the scalar loss factored out.
    pub fn jones(&self) -> JonesOperator {
        match self {
            Component::Fiber { jones, .. }
            | Component::DelayFiber { jones, .. }
            | Component::PolController { jones } => *jones,
            Component::PdlElement { t_max, t_min, axis } => {
                JonesOperator::diattenuator(1.0, t_min / t_max, *axis)
            }
            Component::PhaseModulator { .. } | Component::Attenuator { .. } => JonesOperator::identity(),
        }
    }

    /// Same element with its Jones matrix multiplied by `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> Component {
        let ph = JonesOperator::phase(theta);
        let mut out = self.clone();
        match &mut out {
            Component::Fiber { jones, .. }
            | Component::DelayFiber { jones, .. }
            | Component::PolController { jones } => *jones = ph.mul(jones),
            _ => {}
        }
        out
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLoop(format!("component {index} ({}): {msg}", self.kind())));
        match self {
            Component::Fiber {
                length_m,
                loss_db_per_km,
                jones,
            }
            | Component::DelayFiber {
                length_m,
                loss_db_per_km,
                jones,
            } => {
                // the delay line may be zero length so degenerate geometries can be studied
                let min_ok = if matches!(self, Component::DelayFiber { .. }) {
                    *length_m >= 0.0
                } else {
                    *length_m > 0.0
                };
                if !length_m.is_finite() || !min_ok {
                    return bad(format!("length must be > 0, got {length_m}"));
                }
                if !(loss_db_per_km.is_finite() && *loss_db_per_km >= 0.0) {
                    return bad(format!("loss_db_per_km must be >= 0, got {loss_db_per_km}"));
                }
                if !jones.is_unitary(UNITARY_TOL) {
                    return bad("fiber birefringence must be unitary".into());
                }
            }
            Component::PolController { jones } => {
                if !jones.is_unitary(UNITARY_TOL) {
                    return bad("controller matrix must be unitary".into());
                }
            }
            Component::Attenuator { transmittance } => {
                if !(*transmittance > 0.0 && *transmittance <= 1.0) {
                    return bad(format!("transmittance must be in (0, 1], got {transmittance}"));
                }
            }
            Component::PdlElement { t_max, t_min, axis } => {
                if !(*t_max > 0.0 && *t_max <= 1.0 && *t_min >= 0.0 && t_min <= t_max && axis.is_finite()) {
                    return bad(format!(
                        "singular values must satisfy 0 <= t_min <= t_max <= 1, t_max > 0; got t_max={t_max}, t_min={t_min}"
                    ));
                }
            }
            Component::PhaseModulator { .. } => {}
        }
        Ok(())
    }
}

/// Ordered component list in CW traversal order, from the coupler back to it.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub components: Vec<Component>,
    /// Power fraction coupled to the cross port.
    pub coupler_ratio: f64,
    pub source_pol: JonesState,
}

impl LoopConfig {
    pub fn new(components: Vec<Component>) -> Self {
        LoopConfig {
            components,
            coupler_ratio: 0.5,
            source_pol: JonesState::horizontal(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupler_ratio > 0.0 && self.coupler_ratio < 1.0) {
            return Err(Error::InvalidLoop(format!(
                "coupler_ratio must be in (0, 1), got {}",
                self.coupler_ratio
            )));
        }
        let count = |pred: &dyn Fn(&Component) -> bool| self.components.iter().filter(|c| pred(c)).count();
        let alice = count(&|c| matches!(c, Component::PhaseModulator { owner: Owner::Alice }));
        let bob = count(&|c| matches!(c, Component::PhaseModulator { owner: Owner::Bob }));
        if alice != 1 || bob != 1 {
            return Err(Error::InvalidLoop(format!(
                "exactly one phase modulator per party required (alice: {alice}, bob: {bob})"
            )));
        }
        let att = count(&|c| matches!(c, Component::Attenuator { .. }));
        if att != 1 {
            return Err(Error::InvalidLoop(format!("exactly one attenuator required, found {att}")));
        }
        let delay = count(&|c| matches!(c, Component::DelayFiber { .. }));
        if delay != 1 {
            return Err(Error::InvalidLoop(format!("exactly one delay fiber required, found {delay}")));
        }
        for (i, c) in self.components.iter().enumerate() {
            c.validate(i)?;
        }
        Ok(())
    }

    fn pm_index(&self, who: Owner) -> Option<usize> {
        self.components
            .iter()
            .position(|c| matches!(c, Component::PhaseModulator { owner } if *owner == who))
    }

    pub fn alice_pm_index(&self) -> Option<usize> {
        self.pm_index(Owner::Alice)
    }

    pub fn bob_pm_index(&self) -> Option<usize> {
        self.pm_index(Owner::Bob)
    }

    pub fn fiber_length_m(&self) -> f64 {
        self.components.iter().map(Component::length_m).sum()
    }
}

/// Accumulated transfer of one traversal direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    /// Polarization transfer with scalar loss factored out.
    pub jones_total: JonesOperator,
    pub amplitude_transmittance: f64,
    /// Summed fiber length in meters.
    pub optical_length: f64,
}

impl PathSummary {
    pub fn operator(&self) -> JonesOperator {
        self.jones_total.scale(self.amplitude_transmittance)
    }
}

/// Compose the loop in one direction. Phase-modulator shifts are not included.
pub fn accumulate(config: &LoopConfig, direction: Direction) -> Result<PathSummary> {
    config.validate()?;
    let ops: Vec<JonesOperator> = match direction {
        Direction::Cw => config.components.iter().map(Component::jones).collect(),
        Direction::Ccw => config.components.iter().rev().map(|c| backward(&c.jones())).collect(),
    };
    let power: f64 = config.components.iter().map(Component::power_transmittance).product();
    Ok(PathSummary {
        jones_total: compose(&ops)?,
        amplitude_transmittance: power.sqrt(),
        optical_length: config.fiber_length_m(),
    })
}

/// Modulator settings for one pulse: Alice's shift lands on the CW pulse,
/// Bob's on the CCW pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePair {
    pub phi_a: f64,
    pub phi_b: f64,
}

impl PhasePair {
    pub fn new(phi_a: f64, phi_b: f64) -> Self {
        PhasePair {
            phi_a: phi_a.rem_euclid(TAU),
            phi_b: phi_b.rem_euclid(TAU),
        }
    }

    pub fn delta(&self) -> f64 {
        self.phi_a - self.phi_b
    }
}

/// Loop compiled for repeated per-pulse evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LoopModel {
    cw: JonesState,
    ccw: JonesState,
    cross: Complex64,
    bar: f64,
    kross: f64,
}

impl LoopModel {
    pub fn new(config: &LoopConfig) -> Result<Self> {
        config.validate()?;
        config.source_pol.ensure_normalized()?;
        let cw = accumulate(config, Direction::Cw)?.operator().apply(&config.source_pol);
        let ccw = accumulate(config, Direction::Ccw)?.operator().apply(&config.source_pol);
        Ok(LoopModel {
            cw,
            ccw,
            cross: ccw.inner(&cw),
            bar: 1.0 - config.coupler_ratio,
            kross: config.coupler_ratio,
        })
    }

    /// Per-photon probabilities of leaving toward APD1 and APD2.
    pub fn probs(&self, phases: PhasePair) -> (f64, f64) {
        self.probs_at(phases.delta())
    }

    /// Same as [`LoopModel::probs`] for a raw phase difference `φ_A − φ_B`.
    pub fn probs_at(&self, delta: f64) -> (f64, f64) {
        let pw_cw = self.cw.norm_sqr();
        let pw_ccw = self.ccw.norm_sqr();
        let z = (Complex64::from_polar(1.0, delta) * self.cross).re;
        let ts = self.bar * self.kross;
        let p1 = ts * (pw_cw + pw_ccw + 2.0 * z);
        let p2 = self.bar * self.bar * pw_cw + self.kross * self.kross * pw_ccw - 2.0 * ts * z;
        (p1.max(0.0), p2.max(0.0))
    }

    /// Single-path powers reaching the coupler (CW, CCW), input normalized.
    pub fn path_powers(&self) -> (f64, f64) {
        (self.cw.norm_sqr(), self.ccw.norm_sqr())
    }

    /// Interference cross term `⟨v_ccw, v_cw⟩`.
    pub fn cross_term(&self) -> Complex64 {
        self.cross
    }

    pub fn visibility(&self) -> Result<f64> {
        let (a, b) = self.path_powers();
        if a <= 0.0 {
            return Err(Error::ZeroPathPower("cw"));
        }
        if b <= 0.0 {
            return Err(Error::ZeroPathPower("ccw"));
        }
        Ok(self.cross.norm() / (a * b).sqrt())
    }
}

pub fn detection_probs(config: &LoopConfig, phases: PhasePair) -> Result<(f64, f64)> {
    Ok(LoopModel::new(config)?.probs(phases))
}

/// Interference visibility at the coupler, including any diattenuation.
pub fn pdl_penalty(config: &LoopConfig) -> Result<f64> {
    LoopModel::new(config)?.visibility()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub index: usize,
    pub kind: ComponentKind,
    pub direction: Direction,
    pub arrival_s: f64,
    pub window_end_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSchedule {
    pub entries: Vec<ScheduleEntry>,
    /// |t_cw − t_ccw| at Alice's modulator.
    pub separation_at_alice_s: f64,
    pub separation_at_bob_s: f64,
    /// The two pulse windows overlap at Alice's modulator.
    pub conflict: bool,
}

/// Arrival times of the CW and CCW pulses at every component, each opening a
/// window of `gate_window_s`.
pub fn timing_schedule(config: &LoopConfig, group_index: f64, gate_window_s: f64) -> Result<TimingSchedule> {
    config.validate()?;
    if !(group_index > 1.0 && group_index.is_finite()) {
        return Err(Error::param("group_index", format!("must be > 1, got {group_index}")));
    }
    if !(gate_window_s >= 0.0) {
        return Err(Error::param("gate_window_s", "must be >= 0"));
    }
    let v = SPEED_OF_LIGHT / group_index;
    let total = config.fiber_length_m();
    let mut entries = Vec::with_capacity(2 * config.components.len());
    let mut start = 0.0;
    let mut cw_times = Vec::with_capacity(config.components.len());
    let mut ccw_times = Vec::with_capacity(config.components.len());
    for (index, c) in config.components.iter().enumerate() {
        let end = start + c.length_m();
        let t_cw = start / v;
        let t_ccw = (total - end) / v;
        cw_times.push(t_cw);
        ccw_times.push(t_ccw);
        for (direction, t) in [(Direction::Cw, t_cw), (Direction::Ccw, t_ccw)] {
            entries.push(ScheduleEntry {
                index,
                kind: c.kind(),
                direction,
                arrival_s: t,
                window_end_s: t + gate_window_s,
            });
        }
        start = end;
    }
    let sep = |i: Option<usize>| i.map(|i| (cw_times[i] - ccw_times[i]).abs()).unwrap_or(0.0);
    let separation_at_alice_s = sep(config.alice_pm_index());
    Ok(TimingSchedule {
        entries,
        separation_at_alice_s,
        separation_at_bob_s: sep(config.bob_pm_index()),
        conflict: separation_at_alice_s < gate_window_s,
    })
}

/// Bob's side of the loop in CW order: controller at the coupler, Bob's
/// modulator, Bob's controller, optional lumped loss, delay line.
#[derive(Debug, Clone, PartialEq)]
pub struct HubLayout {
    pub pc_coupler: JonesOperator,
    pub pc_bob: JonesOperator,
    pub extra_transmittance: f64,
    pub delay: Component,
}

impl HubLayout {
    pub fn components(&self) -> Vec<Component> {
        let mut out = vec![
            Component::PolController { jones: self.pc_coupler },
            Component::PhaseModulator { owner: Owner::Bob },
            Component::PolController { jones: self.pc_bob },
        ];
        if self.extra_transmittance != 1.0 {
            let t = self.extra_transmittance.sqrt();
            out.push(Component::PdlElement {
                t_max: t,
                t_min: t,
                axis: 0.0,
            });
        }
        out.push(self.delay.clone());
        out
    }
}

/// A partner module in CW order: controller, modulator, optional PDL, attenuator.
#[derive(Debug, Clone, PartialEq)]
pub struct PartnerModule {
    pub pc: JonesOperator,
    pub pdl: Option<Component>,
    pub attenuator_transmittance: f64,
}

impl PartnerModule {
    pub fn components(&self) -> Vec<Component> {
        let mut out = vec![
            Component::PolController { jones: self.pc },
            Component::PhaseModulator { owner: Owner::Alice },
        ];
        out.extend(self.pdl.clone());
        out.push(Component::Attenuator {
            transmittance: self.attenuator_transmittance,
        });
        out
    }
}

/// The two-party loop: hub, lower fiber to Alice, Alice's module, upper fiber back.
pub fn two_party_loop(hub: &HubLayout, lower: Component, alice: &PartnerModule, upper: Component) -> Vec<Component> {
    let mut out = hub.components();
    out.push(lower);
    out.extend(alice.components());
    out.push(upper);
    out
}
