//! Scenario files.
//!
//! A scenario is a TOML document. Every section and key is optional and
//! defaults are filled in on load; unknown keys are rejected. At most one
//! topology section may be present: `[loop]` (the standard two-party layout),
//! `[custom_loop]` (explicit component list) or `[ring]` (multi-party network).
//! Without one, the default `[loop]` is used.
//!
//! The loaded [`Scenario`] serializes back to a complete file with every
//! effective value spelled out; its digest covers all of them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bb84::{DetectorMapping, EveConfig};
use crate::channel::{DetectorParams, DoubleClickPolicy, SourceParams};
use crate::error::{Error, Result};
use crate::jones::{pc_matrix, JonesOperator, JonesState, PcSetting};
use crate::loopmodel::{
    two_party_loop, Component, HubLayout, LoopConfig, Owner, PartnerModule, DEFAULT_GATE_WINDOW_S,
    DEFAULT_GROUP_INDEX, DEFAULT_LOSS_DB_PER_KM,
};
use crate::loopnet::{select_partner, Entity, RingConfig};
use crate::rng::{RngStream, Substream};
use crate::session::{Disturbance, Protocol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub seed: u64,
    pub source: SourceSection,
    pub detectors: DetectorSection,
    pub protocol: ProtocolSection,
    pub eve: EveConfig,
    #[serde(rename = "loop", skip_serializing_if = "Option::is_none")]
    pub two_party: Option<LoopSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom_loop: Option<CustomLoopSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ring: Option<RingSection>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 1,
            source: SourceSection::default(),
            detectors: DetectorSection::default(),
            protocol: ProtocolSection::default(),
            eve: EveConfig::default(),
            two_party: None,
            custom_loop: None,
            ring: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    pub mu: f64,
    pub rep_rate: f64,
    pub wavelength: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        let s = SourceParams::default();
        SourceSection {
            mu: s.mu,
            rep_rate: s.rep_rate,
            wavelength: s.wavelength,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub efficiency: f64,
    pub dark_prob: f64,
    pub double_click_policy: DoubleClickPolicy,
    pub mapping: DetectorMapping,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorParams::default();
        DetectorSection {
            efficiency: d.efficiency,
            dark_prob: d.dark_prob,
            double_click_policy: d.double_click_policy,
            mapping: DetectorMapping::Standard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub pulses: u64,
    pub disclosed_fraction: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            pulses: 1_000_000,
            disclosed_fraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Birefringence {
    #[default]
    Identity,
    /// Independent Haar-random unitary per fiber, seeded by `birefringence_seed`.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdlSpec {
    pub t_max: f64,
    pub t_min: f64,
    #[serde(default)]
    pub axis: f64,
}

/// The standard two-party loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopSection {
    /// Alice → coupler fiber.
    pub upper_length_m: f64,
    /// Bob → Alice fiber.
    pub lower_length_m: f64,
    pub delay_length_m: f64,
    pub loss_db_per_km: f64,
    pub coupler_ratio: f64,
    pub group_index: f64,
    pub gate_window_s: f64,
    /// Lumped loss in Bob's module.
    pub extra_transmittance: f64,
    /// Residual polarization rotation of the coupler controller.
    pub misalignment_rad: f64,
    pub attenuator_transmittance: f64,
    pub birefringence: Birefringence,
    pub birefringence_seed: u64,
    /// `[re_x, im_x, re_y, im_y]`.
    pub source_pol: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pc_coupler: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pc_bob: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pc_alice: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdl: Option<PdlSpec>,
}

impl Default for LoopSection {
    fn default() -> Self {
        LoopSection {
            upper_length_m: 200.0,
            lower_length_m: 200.0,
            delay_length_m: 800.0,
            loss_db_per_km: DEFAULT_LOSS_DB_PER_KM,
            coupler_ratio: 0.5,
            group_index: DEFAULT_GROUP_INDEX,
            gate_window_s: DEFAULT_GATE_WINDOW_S,
            extra_transmittance: 1.0,
            misalignment_rad: 0.0,
            attenuator_transmittance: 1.0,
            birefringence: Birefringence::Identity,
            birefringence_seed: 0,
            source_pol: [1.0, 0.0, 0.0, 0.0],
            pc_coupler: None,
            pc_bob: None,
            pc_alice: None,
            pdl: None,
        }
    }
}

/// Explicit Jones matrix description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JonesSpec {
    #[default]
    Identity,
    Rotation {
        angle: f64,
    },
    Retarder {
        axis: f64,
        retardance: f64,
    },
    Pc {
        angles: [f64; 3],
    },
    /// Haar-random unitary from a seed.
    Random {
        seed: u64,
    },
    Matrix {
        re: [[f64; 2]; 2],
        im: [[f64; 2]; 2],
    },
}

impl JonesSpec {
    pub fn operator(&self) -> JonesOperator {
        use num_complex::Complex64 as C;
        match self {
            JonesSpec::Identity => JonesOperator::identity(),
            JonesSpec::Rotation { angle } => JonesOperator::rotation(*angle),
            JonesSpec::Retarder { axis, retardance } => JonesOperator::retarder(*axis, *retardance),
            JonesSpec::Pc { angles } => pc_matrix(&PcSetting::from_array(*angles)),
            JonesSpec::Random { seed } => {
                JonesOperator::random_unitary(&mut RngStream::substream(*seed, Substream::Birefringence, 0))
            }
            JonesSpec::Matrix { re, im } => JonesOperator::from_rows([
                [C::new(re[0][0], im[0][0]), C::new(re[0][1], im[0][1])],
                [C::new(re[1][0], im[1][0]), C::new(re[1][1], im[1][1])],
            ]),
        }
    }
}

fn default_loss() -> f64 {
    DEFAULT_LOSS_DB_PER_KM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentSpec {
    Fiber {
        length_m: f64,
        #[serde(default = "default_loss")]
        loss_db_per_km: f64,
        #[serde(default)]
        jones: JonesSpec,
    },
    DelayFiber {
        length_m: f64,
        #[serde(default = "default_loss")]
        loss_db_per_km: f64,
        #[serde(default)]
        jones: JonesSpec,
    },
    PhaseModulator {
        owner: Owner,
    },
    PolController {
        #[serde(default)]
        jones: JonesSpec,
    },
    Attenuator {
        transmittance: f64,
    },
    PdlElement {
        t_max: f64,
        t_min: f64,
        #[serde(default)]
        axis: f64,
    },
}

impl ComponentSpec {
    fn build(&self) -> Component {
        match self {
            ComponentSpec::Fiber {
                length_m,
                loss_db_per_km,
                jones,
            } => Component::Fiber {
                length_m: *length_m,
                loss_db_per_km: *loss_db_per_km,
                jones: jones.operator(),
            },
            ComponentSpec::DelayFiber {
                length_m,
                loss_db_per_km,
                jones,
            } => Component::DelayFiber {
                length_m: *length_m,
                loss_db_per_km: *loss_db_per_km,
                jones: jones.operator(),
            },
            ComponentSpec::PhaseModulator { owner } => Component::PhaseModulator { owner: *owner },
            ComponentSpec::PolController { jones } => Component::PolController { jones: jones.operator() },
            ComponentSpec::Attenuator { transmittance } => Component::Attenuator {
                transmittance: *transmittance,
            },
            ComponentSpec::PdlElement { t_max, t_min, axis } => Component::PdlElement {
                t_max: *t_max,
                t_min: *t_min,
                axis: *axis,
            },
        }
    }
}

/// Explicit component list in CW order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomLoopSection {
    #[serde(default = "half")]
    pub coupler_ratio: f64,
    #[serde(default = "default_group_index")]
    pub group_index: f64,
    #[serde(default = "default_gate_window")]
    pub gate_window_s: f64,
    #[serde(default = "horizontal")]
    pub source_pol: [f64; 4],
    pub components: Vec<ComponentSpec>,
}

fn half() -> f64 {
    0.5
}
fn default_group_index() -> f64 {
    DEFAULT_GROUP_INDEX
}
fn default_gate_window() -> f64 {
    DEFAULT_GATE_WINDOW_S
}
fn horizontal() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntitySection {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pc: Option<[f64; 3]>,
    #[serde(default = "one")]
    pub attenuator_transmittance: f64,
    #[serde(default = "one")]
    pub insertion_transmittance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<Disturbance>,
}

/// Looped network: Bob's hub plus a ring of entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSection {
    /// Entity Bob runs the session with.
    pub partner: String,
    /// `entities.len() + 1` lengths in CW order, starting at the hub.
    pub link_lengths_m: Vec<f64>,
    #[serde(default = "default_delay")]
    pub delay_length_m: f64,
    #[serde(default = "default_loss")]
    pub loss_db_per_km: f64,
    #[serde(default = "half")]
    pub coupler_ratio: f64,
    #[serde(default = "default_group_index")]
    pub group_index: f64,
    #[serde(default = "default_gate_window")]
    pub gate_window_s: f64,
    #[serde(default = "one")]
    pub extra_transmittance: f64,
    #[serde(default)]
    pub misalignment_rad: f64,
    #[serde(default)]
    pub birefringence: Birefringence,
    #[serde(default)]
    pub birefringence_seed: u64,
    #[serde(default = "horizontal")]
    pub source_pol: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pc_coupler: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pc_bob: Option<[f64; 3]>,
    pub entities: Vec<EntitySection>,
}

fn default_delay() -> f64 {
    800.0
}

/// Optics derived from a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    TwoParty(LoopConfig),
    Ring { ring: RingConfig, partner: String },
}

/// Everything needed to run a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Built {
    pub topology: Topology,
    pub protocol: Protocol,
    pub group_index: f64,
    pub gate_window_s: f64,
}

impl Built {
    /// Two-party loop seen by the session plus the protocol including any
    /// ring disturbances.
    pub fn session_loop(&self) -> Result<(LoopConfig, Protocol)> {
        match &self.topology {
            Topology::TwoParty(cfg) => Ok((cfg.clone(), self.protocol.clone())),
            Topology::Ring { ring, partner } => {
                let flat = select_partner(ring, partner)?;
                let p = flat.protocol(&self.protocol);
                Ok((flat.config, p))
            }
        }
    }
}

fn state_from(v: [f64; 4]) -> Result<JonesState> {
    use num_complex::Complex64 as C;
    let s = JonesState::new(C::new(v[0], v[1]), C::new(v[2], v[3]));
    if !s.is_normalized() {
        return Err(Error::param("source_pol", format!("must have unit norm, got norm² = {}", s.norm_sqr())));
    }
    Ok(s)
}

fn pc_or_identity(pc: Option<[f64; 3]>) -> JonesOperator {
    pc.map(|a| pc_matrix(&PcSetting::from_array(a))).unwrap_or_else(JonesOperator::identity)
}

/// Assigns per-fiber birefringence in CW order.
struct FiberJones {
    mode: Birefringence,
    seed: u64,
    next: u64,
}

impl FiberJones {
    fn next(&mut self) -> JonesOperator {
        let i = self.next;
        self.next += 1;
        match self.mode {
            Birefringence::Identity => JonesOperator::identity(),
            Birefringence::Random => {
                JonesOperator::random_unitary(&mut RngStream::substream(self.seed, Substream::Birefringence, i))
            }
        }
    }

    fn fiber(&mut self, length_m: f64, loss_db_per_km: f64) -> Component {
        Component::Fiber {
            length_m,
            loss_db_per_km,
            jones: self.next(),
        }
    }
}

struct HubParams<'a> {
    delay_length_m: f64,
    loss_db_per_km: f64,
    extra_transmittance: f64,
    misalignment_rad: f64,
    pc_coupler: Option<[f64; 3]>,
    pc_bob: Option<[f64; 3]>,
    fibers: &'a mut FiberJones,
}

fn hub(p: HubParams<'_>) -> Result<HubLayout> {
    if !(p.extra_transmittance > 0.0 && p.extra_transmittance <= 1.0) {
        return Err(Error::param(
            "extra_transmittance",
            format!("must be in (0, 1], got {}", p.extra_transmittance),
        ));
    }
    if !p.misalignment_rad.is_finite() {
        return Err(Error::param("misalignment_rad", "must be finite"));
    }
    let delay = Component::DelayFiber {
        length_m: p.delay_length_m,
        loss_db_per_km: p.loss_db_per_km,
        jones: p.fibers.next(),
    };
    Ok(HubLayout {
        pc_coupler: JonesOperator::rotation(p.misalignment_rad).mul(&pc_or_identity(p.pc_coupler)),
        pc_bob: pc_or_identity(p.pc_bob),
        extra_transmittance: p.extra_transmittance,
        delay,
    })
}

impl LoopSection {
    pub fn build(&self) -> Result<LoopConfig> {
        let mut fibers = FiberJones {
            mode: self.birefringence,
            seed: self.birefringence_seed,
            next: 0,
        };
        let hub = hub(HubParams {
            delay_length_m: self.delay_length_m,
            loss_db_per_km: self.loss_db_per_km,
            extra_transmittance: self.extra_transmittance,
            misalignment_rad: self.misalignment_rad,
            pc_coupler: self.pc_coupler,
            pc_bob: self.pc_bob,
            fibers: &mut fibers,
        })?;
        let lower = fibers.fiber(self.lower_length_m, self.loss_db_per_km);
        let alice = PartnerModule {
            pc: pc_or_identity(self.pc_alice),
            pdl: self.pdl.map(|p| Component::PdlElement {
                t_max: p.t_max,
                t_min: p.t_min,
                axis: p.axis,
            }),
            attenuator_transmittance: self.attenuator_transmittance,
        };
        let upper = fibers.fiber(self.upper_length_m, self.loss_db_per_km);
        let cfg = LoopConfig {
            components: two_party_loop(&hub, lower, &alice, upper),
            coupler_ratio: self.coupler_ratio,
            source_pol: state_from(self.source_pol)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RingSection {
    pub fn build(&self) -> Result<RingConfig> {
        let mut fibers = FiberJones {
            mode: self.birefringence,
            seed: self.birefringence_seed,
            next: 0,
        };
        let hub = hub(HubParams {
            delay_length_m: self.delay_length_m,
            loss_db_per_km: self.loss_db_per_km,
            extra_transmittance: self.extra_transmittance,
            misalignment_rad: self.misalignment_rad,
            pc_coupler: self.pc_coupler,
            pc_bob: self.pc_bob,
            fibers: &mut fibers,
        })?;
        let links = self
            .link_lengths_m
            .iter()
            .map(|l| fibers.fiber(*l, self.loss_db_per_km))
            .collect();
        let entities = self
            .entities
            .iter()
            .map(|e| Entity {
                id: e.id.clone(),
                module: PartnerModule {
                    pc: pc_or_identity(e.pc),
                    pdl: None,
                    attenuator_transmittance: e.attenuator_transmittance,
                },
                insertion_transmittance: e.insertion_transmittance,
                disturbance: e.disturbance,
            })
            .collect();
        let ring = RingConfig {
            hub,
            entities,
            links,
            coupler_ratio: self.coupler_ratio,
            source_pol: state_from(self.source_pol)?,
        };
        ring.validate()?;
        Ok(ring)
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn source(&self) -> SourceParams {
        SourceParams {
            mu: self.source.mu,
            rep_rate: self.source.rep_rate,
            wavelength: self.source.wavelength,
        }
    }

    pub fn detectors(&self) -> DetectorParams {
        DetectorParams {
            efficiency: self.detectors.efficiency,
            dark_prob: self.detectors.dark_prob,
            double_click_policy: self.detectors.double_click_policy,
        }
    }

    /// The default `[loop]` is made explicit when no topology is given.
    pub fn with_resolved_topology(mut self) -> Self {
        if self.two_party.is_none() && self.custom_loop.is_none() && self.ring.is_none() {
            self.two_party = Some(LoopSection::default());
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let sections =
            [self.two_party.is_some(), self.custom_loop.is_some(), self.ring.is_some()].iter().filter(|x| **x).count();
        if sections > 1 {
            return Err(Error::Scenario(
                "at most one of [loop], [custom_loop], [ring] may be given".into(),
            ));
        }
        if self.protocol.pulses < 1 {
            return Err(Error::param("protocol.pulses", "must be >= 1"));
        }
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Built> {
        let mut protocol = Protocol::new(self.source(), self.detectors());
        protocol.eve = self.eve;
        protocol.disclosed_fraction = self.protocol.disclosed_fraction;
        protocol.mapping = self.detectors.mapping;
        protocol.validate()?;

        let resolved = self.clone().with_resolved_topology();
        let (topology, group_index, gate_window_s) = if let Some(l) = &resolved.two_party {
            (Topology::TwoParty(l.build()?), l.group_index, l.gate_window_s)
        } else if let Some(c) = &resolved.custom_loop {
            let cfg = LoopConfig {
                components: c.components.iter().map(ComponentSpec::build).collect(),
                coupler_ratio: c.coupler_ratio,
                source_pol: state_from(c.source_pol)?,
            };
            cfg.validate()?;
            (Topology::TwoParty(cfg), c.group_index, c.gate_window_s)
        } else {
            let r = resolved.ring.as_ref().expect("one topology");
            let ring = r.build()?;
            if !ring.entities.iter().any(|e| e.id == r.partner) {
                return Err(Error::UnknownEntity(r.partner.clone()));
            }
            (
                Topology::Ring {
                    ring,
                    partner: r.partner.clone(),
                },
                r.group_index,
                r.gate_window_s,
            )
        };
        if !(group_index > 1.0) {
            return Err(Error::param("group_index", format!("must be > 1, got {group_index}")));
        }
        Ok(Built {
            topology,
            protocol,
            group_index,
            gate_window_s,
        })
    }

    /// SHA-256 over the canonical JSON form of every effective parameter,
    /// first 16 hex digits.
    pub fn digest(&self) -> String {
        let resolved = self.clone().with_resolved_topology();
        let json = serde_json::to_string(&resolved).expect("scenario serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

/// Read, parse and validate a scenario file, filling every default.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    let s: Scenario =
        toml::from_str(&text).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    s.validate()
        .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    Ok(s.with_resolved_topology())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = Scenario::from_toml_str("[source]\nmu = 0.2\n[protocol]\npulses = 1000\n")
            .unwrap()
            .with_resolved_topology();
        assert_eq!(s.source.mu, 0.2);
        assert_eq!(s.source.rep_rate, 100e3);
        assert_eq!(s.source.wavelength, 830e-9);
        assert_eq!(s.protocol.pulses, 1000);
        let l = s.two_party.as_ref().unwrap();
        assert_eq!(l.birefringence, Birefringence::Identity);
        assert_eq!(l.misalignment_rad, 0.0);
        let b = s.build().unwrap();
        let Topology::TwoParty(cfg) = b.topology else { panic!() };
        let m = crate::loopmodel::LoopModel::new(&cfg).unwrap();
        assert!((m.visibility().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys() {
        let e = Scenario::from_toml_str("[source]\nmuu = 0.2\n").unwrap_err().to_string();
        assert!(e.contains("muu"), "{e}");
        assert!(e.contains("line 2"), "{e}");
        assert!(Scenario::from_toml_str("bogus = 1\n").is_err());
    }

    #[test]
    fn rejects_negative_mu_by_name() {
        let e = Scenario::from_toml_str("[source]\nmu = -1\n").unwrap_err().to_string();
        assert!(e.contains("source.mu"), "{e}");
    }

    #[test]
    fn rejects_two_topologies() {
        let text = "[loop]\n[ring]\npartner = \"a\"\nlink_lengths_m = [1.0, 1.0]\nentities = [{ id = \"a\" }]\n";
        assert!(Scenario::from_toml_str(text).unwrap_err().to_string().contains("at most one"));
    }

    #[test]
    fn digest_tracks_every_parameter() {
        let a = Scenario::default();
        let mut b = a.clone();
        b.detectors.dark_prob = 1e-9;
        assert_ne!(a.digest(), b.digest());
        let mut c = a.clone();
        c.two_party = Some(LoopSection {
            gate_window_s: 11e-9,
            ..Default::default()
        });
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest(), a.clone().with_resolved_topology().digest());
        assert_eq!(a.digest().len(), 16);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut s = Scenario::default().with_resolved_topology();
        s.two_party.as_mut().unwrap().pc_alice = Some([0.1, 0.2, 0.3]);
        s.eve = EveConfig::intercept_resend(0.3);
        let back = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn custom_loop_components() {
        let text = r#"
[custom_loop]
components = [
  { kind = "pol_controller", jones = { type = "rotation", angle = 0.1 } },
  { kind = "phase_modulator", owner = "bob" },
  { kind = "delay_fiber", length_m = 800.0 },
  { kind = "fiber", length_m = 200.0, jones = { type = "random", seed = 4 } },
  { kind = "phase_modulator", owner = "alice" },
  { kind = "attenuator", transmittance = 1.0 },
  { kind = "pdl_element", t_max = 1.0, t_min = 0.9 },
  { kind = "fiber", length_m = 200.0, loss_db_per_km = 0.0 },
]
"#;
        let b = Scenario::from_toml_str(text).unwrap().build().unwrap();
        let Topology::TwoParty(cfg) = b.topology else { panic!() };
        assert_eq!(cfg.components.len(), 8);
        assert_eq!(cfg.alice_pm_index(), Some(4));

        let bad = text.replace("owner = \"bob\"", "owner = \"alice\"");
        assert!(Scenario::from_toml_str(&bad).unwrap_err().to_string().contains("phase modulator"));
    }

    #[test]
    fn ring_section_builds() {
        let text = r#"
[ring]
partner = "fox"
link_lengths_m = [100.0, 100.0, 100.0]
[[ring.entities]]
id = "david"
disturbance = { kind = "gaussian", sigma = 0.3 }
[[ring.entities]]
id = "fox"
"#;
        let s = Scenario::from_toml_str(text).unwrap();
        let (cfg, p) = s.build().unwrap().session_loop().unwrap();
        assert_eq!(p.disturbances, vec![Disturbance::Gaussian { sigma: 0.3 }]);
        assert_eq!(cfg.alice_pm_index(), Some(cfg.components.len() - 3));
        let bad = text.replace("partner = \"fox\"", "partner = \"zed\"");
        assert!(Scenario::from_toml_str(&bad).is_err());
    }

    #[test]
    fn rejects_unnormalized_source_pol() {
        let e = Scenario::from_toml_str("[loop]\nsource_pol = [1.0, 0.0, 1.0, 0.0]\n").unwrap_err();
        assert!(e.to_string().contains("source_pol"));
    }

    #[test]
    fn random_birefringence_is_seeded() {
        let text = "[loop]\nbirefringence = \"random\"\nbirefringence_seed = 3\n";
        let a = Scenario::from_toml_str(text).unwrap().build().unwrap();
        let b = Scenario::from_toml_str(text).unwrap().build().unwrap();
        assert_eq!(a, b);
        let c = Scenario::from_toml_str(&text.replace("= 3", "= 4")).unwrap().build().unwrap();
        assert_ne!(a, c);
    }
}
