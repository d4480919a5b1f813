//! Looped multi-party network.
//!
//! Bob's hub (coupler, modulator, delay line) closes a ring of entity modules
//! joined by link fibers. For a session Bob picks one entity as partner; the
//! partner's module acts as Alice's, and every other module lets pulses through
//! with no phase and no extra attenuation, unless it disturbs them.

use std::collections::HashSet;

use crate::bb84::{SessionStats, Z95};
use crate::error::{Error, Result};
use crate::jones::JonesState;
use crate::loopmodel::{Component, HubLayout, LoopConfig, LoopModel, PartnerModule};
use crate::session::{run_session, Disturbance, Protocol};

/// QBER above which a session is flagged as disturbed.
pub const DEFAULT_DISTURBANCE_THRESHOLD: f64 = 0.11;

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: String,
    /// Controller, modulator, optional PDL and attenuator, as for Alice.
    pub module: PartnerModule,
    /// Power transmittance of the module when passing pulses through.
    pub insertion_transmittance: f64,
    /// Phase disturbance applied when not selected.
    pub disturbance: Option<Disturbance>,
}

impl Entity {
    pub fn quiet(id: impl Into<String>, module: PartnerModule) -> Self {
        Entity {
            id: id.into(),
            module,
            insertion_transmittance: 1.0,
            disturbance: None,
        }
    }

    fn pass_through(&self) -> Vec<Component> {
        let mut out = vec![Component::PolController { jones: self.module.pc }];
        out.extend(self.module.pdl.clone());
        if self.insertion_transmittance != 1.0 {
            let t = self.insertion_transmittance.sqrt();
            out.push(Component::PdlElement {
                t_max: t,
                t_min: t,
                axis: 0.0,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingConfig {
    pub hub: HubLayout,
    /// CW order.
    pub entities: Vec<Entity>,
    /// `links[i]` precedes `entities[i]` in CW order; the last link returns to
    /// the hub. Length is `entities.len() + 1`.
    pub links: Vec<Component>,
    pub coupler_ratio: f64,
    pub source_pol: JonesState,
}

impl RingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.entities.is_empty() {
            return Err(Error::InvalidRing("ring needs at least one entity".into()));
        }
        if self.links.len() != self.entities.len() + 1 {
            return Err(Error::InvalidRing(format!(
                "ring of {} entities needs {} link fibers, got {}",
                self.entities.len(),
                self.entities.len() + 1,
                self.links.len()
            )));
        }
        if let Some(l) = self.links.iter().find(|l| !matches!(l, Component::Fiber { .. })) {
            return Err(Error::InvalidRing(format!("links must be fibers, got {}", l.kind())));
        }
        let mut seen = HashSet::new();
        for e in &self.entities {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::InvalidRing(format!("duplicate entity id `{}`", e.id)));
            }
            if !(e.insertion_transmittance > 0.0 && e.insertion_transmittance <= 1.0) {
                return Err(Error::InvalidRing(format!(
                    "entity `{}`: insertion_transmittance must be in (0, 1]",
                    e.id
                )));
            }
            if let Some(d) = &e.disturbance {
                d.validate()?;
            }
        }
        Ok(())
    }

    pub fn entity_ids(&self) -> Vec<&str> {
        self.entities.iter().map(|e| e.id.as_str()).collect()
    }
}

/// A ring reduced to a two-party loop for one partner.
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenedRing {
    pub partner: String,
    pub config: LoopConfig,
    /// Disturbances of the non-selected entities, in ring order.
    pub disturbances: Vec<Disturbance>,
}

pub fn select_partner(ring: &RingConfig, id: &str) -> Result<FlattenedRing> {
    ring.validate()?;
    if !ring.entities.iter().any(|e| e.id == id) {
        return Err(Error::UnknownEntity(id.to_string()));
    }
    let mut components = ring.hub.components();
    let mut disturbances = Vec::new();
    for (link, e) in ring.links.iter().zip(&ring.entities) {
        components.push(link.clone());
        if e.id == id {
            components.extend(e.module.components());
        } else {
            components.extend(e.pass_through());
            disturbances.extend(e.disturbance);
        }
    }
    components.push(ring.links.last().expect("validated").clone());
    let config = LoopConfig {
        components,
        coupler_ratio: ring.coupler_ratio,
        source_pol: ring.source_pol,
    };
    config.validate()?;
    Ok(FlattenedRing {
        partner: id.to_string(),
        config,
        disturbances,
    })
}

impl FlattenedRing {
    /// `base` with this ring's disturbances appended.
    pub fn protocol(&self, base: &Protocol) -> Protocol {
        let mut p = base.clone();
        p.disturbances.extend(self.disturbances.iter().copied());
        p
    }
}

/// BB84 session between Bob and `partner` over the ring.
pub fn run_network_session(
    ring: &RingConfig,
    partner: &str,
    protocol: &Protocol,
    seed: u64,
    pulses: u64,
) -> Result<SessionStats> {
    let flat = select_partner(ring, partner)?;
    let model = LoopModel::new(&flat.config)?;
    run_session(&model, &flat.protocol(protocol), seed, pulses)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Clean,
    Disturbed,
    /// No sifted bits to judge from.
    Indeterminate,
}

/// Disturbed iff the lower edge of the 95% QBER interval exceeds `threshold`.
pub fn detect_disturbance(stats: &SessionStats, threshold: f64) -> Verdict {
    match crate::bb84::wilson_interval(stats.sample_errors, stats.sample_bits, Z95) {
        None => Verdict::Indeterminate,
        Some((lo, _)) if lo > threshold => Verdict::Disturbed,
        Some(_) => Verdict::Clean,
    }
}
