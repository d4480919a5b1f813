//! Weak coherent pulses and avalanche photodiode clicks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Attenuated laser source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Mean photon number per pulse.
    pub mu: f64,
    /// Pulses per second.
    pub rep_rate: f64,
    /// Meters.
    pub wavelength: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        SourceParams {
            mu: 0.1,
            rep_rate: 100e3,
            wavelength: 830e-9,
        }
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::param("source.mu", format!("must be >= 0, got {}", self.mu)));
        }
        if !(self.rep_rate > 0.0 && self.rep_rate.is_finite()) {
            return Err(Error::param("source.rep_rate", format!("must be > 0, got {}", self.rep_rate)));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::param("source.wavelength", format!("must be > 0, got {}", self.wavelength)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DoubleClickPolicy {
    /// Drop pulses where both detectors fire.
    #[default]
    Discard,
    /// Assign a double click to one detector at random.
    RandomAssign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Probability that an arriving photon triggers an avalanche.
    pub efficiency: f64,
    /// Dark-click probability per gate, per detector.
    pub dark_prob: f64,
    pub double_click_policy: DoubleClickPolicy,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            efficiency: 1.0,
            dark_prob: 0.0,
            double_click_policy: DoubleClickPolicy::Discard,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::param(
                "detectors.efficiency",
                format!("must be in [0, 1], got {}", self.efficiency),
            ));
        }
        if !(0.0..1.0).contains(&self.dark_prob) {
            return Err(Error::param(
                "detectors.dark_prob",
                format!("must be in [0, 1), got {}", self.dark_prob),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClickOutcome {
    None,
    D1,
    D2,
    Both,
}

impl ClickOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            ClickOutcome::None => "none",
            ClickOutcome::D1 => "d1",
            ClickOutcome::D2 => "d2",
            ClickOutcome::Both => "both",
        }
    }

    pub fn clicked(&self) -> bool {
        !matches!(self, ClickOutcome::None)
    }
}

/// Joint distribution over the four click outcomes of one gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickProbs {
    pub none: f64,
    pub d1_only: f64,
    pub d2_only: f64,
    pub both: f64,
}

impl ClickProbs {
    pub fn new(none: f64, d1_only: f64, d2_only: f64, both: f64) -> Self {
        ClickProbs {
            none,
            d1_only,
            d2_only,
            both,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.none, self.d1_only, self.d2_only, self.both]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn any_click(&self) -> f64 {
        self.d1_only + self.d2_only + self.both
    }
}

/// Click statistics for per-photon exit probabilities `p1`, `p2`.
///
/// Poisson photon numbers split into independent Poisson streams toward each
/// detector, so the no-photon-click probability at detector `i` is
/// `exp(−μ η p_i)`; dark clicks are independent per detector.
pub fn click_probabilities(p1: f64, p2: f64, src: &SourceParams, det: &DetectorParams) -> Result<ClickProbs> {
    if !(p1 >= 0.0 && p2 >= 0.0 && p1 + p2 <= 1.0 + 1e-12) {
        return Err(Error::InvalidProbabilities(format!(
            "need p1, p2 >= 0 and p1 + p2 <= 1, got ({p1}, {p2})"
        )));
    }
    src.validate()?;
    det.validate()?;
    // 1 − (1−d)·e^{−x}, kept accurate when x and d are tiny
    let click = |p: f64| det.dark_prob - (1.0 - det.dark_prob) * (-src.mu * det.efficiency * p).exp_m1();
    let (c1, c2) = (click(p1), click(p2));
    let (a1, a2) = (1.0 - c1, 1.0 - c2);
    Ok(ClickProbs::new(a1 * a2, c1 * a2, a1 * c2, c1 * c2))
}

/// One categorical draw; consumes exactly one uniform from `rng`.
pub fn sample_pulse(probs: &ClickProbs, rng: &mut RngStream) -> Result<ClickOutcome> {
    let arr = probs.as_array();
    if arr.iter().any(|p| !(0.0..=1.0).contains(p)) || (probs.sum() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbabilities(format!("malformed click distribution {arr:?}")));
    }
    Ok(sample_unchecked(probs, rng.uniform()))
}

/// Categorical draw from a pre-validated distribution with uniform `u`.
pub(crate) fn sample_unchecked(probs: &ClickProbs, u: f64) -> ClickOutcome {
    let mut acc = probs.none;
    if u < acc {
        return ClickOutcome::None;
    }
    acc += probs.d1_only;
    if u < acc {
        return ClickOutcome::D1;
    }
    acc += probs.d2_only;
    if u < acc {
        return ClickOutcome::D2;
    }
    if probs.both > 0.0 {
        ClickOutcome::Both
    } else if probs.d2_only > 0.0 {
        // rounding left a sliver above the cumulative sum
        ClickOutcome::D2
    } else if probs.d1_only > 0.0 {
        ClickOutcome::D1
    } else {
        ClickOutcome::None
    }
}
