//! One-dimensional parameter sweeps.

use std::fmt;
use std::str::FromStr;

use super::{fringe, run, FringePoint, RunReport, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Mu,
    Efficiency,
    DarkProb,
    EveFraction,
    /// Every link fiber is set to this length.
    LinkLengthM,
    DelayLengthM,
    LossDbPerKm,
    MisalignmentRad,
    ExtraTransmittance,
    CouplerRatio,
    /// Phase difference; produces a fringe rather than sessions.
    DeltaPhi,
}

impl Axis {
    pub const ALL: [Axis; 11] = [
        Axis::Mu,
        Axis::Efficiency,
        Axis::DarkProb,
        Axis::EveFraction,
        Axis::LinkLengthM,
        Axis::DelayLengthM,
        Axis::LossDbPerKm,
        Axis::MisalignmentRad,
        Axis::ExtraTransmittance,
        Axis::CouplerRatio,
        Axis::DeltaPhi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Mu => "mu",
            Axis::Efficiency => "efficiency",
            Axis::DarkProb => "dark_prob",
            Axis::EveFraction => "eve_fraction",
            Axis::LinkLengthM => "link_length_m",
            Axis::DelayLengthM => "delay_length_m",
            Axis::LossDbPerKm => "loss_db_per_km",
            Axis::MisalignmentRad => "misalignment_rad",
            Axis::ExtraTransmittance => "extra_transmittance",
            Axis::CouplerRatio => "coupler_ratio",
            Axis::DeltaPhi => "delta_phi",
        }
    }

    /// Write `v` into the scenario.
    pub fn apply(self, s: &mut Scenario, v: f64) -> Result<()> {
        match self {
            Axis::Mu => s.source.mu = v,
            Axis::Efficiency => s.detectors.efficiency = v,
            Axis::DarkProb => s.detectors.dark_prob = v,
            Axis::EveFraction => {
                s.eve.strategy = crate::bb84::EveStrategy::InterceptResend;
                s.eve.fraction = v;
            }
            Axis::DeltaPhi => {}
            Axis::CouplerRatio => {
                if let Some(l) = s.two_party.as_mut() {
                    l.coupler_ratio = v;
                } else if let Some(c) = s.custom_loop.as_mut() {
                    c.coupler_ratio = v;
                } else if let Some(r) = s.ring.as_mut() {
                    r.coupler_ratio = v;
                }
            }
            _ => {
                if let Some(l) = s.two_party.as_mut() {
                    match self {
                        Axis::LinkLengthM => {
                            l.upper_length_m = v;
                            l.lower_length_m = v;
                        }
                        Axis::DelayLengthM => l.delay_length_m = v,
                        Axis::LossDbPerKm => l.loss_db_per_km = v,
                        Axis::MisalignmentRad => l.misalignment_rad = v,
                        Axis::ExtraTransmittance => l.extra_transmittance = v,
                        _ => unreachable!(),
                    }
                } else if let Some(r) = s.ring.as_mut() {
                    match self {
                        Axis::LinkLengthM => r.link_lengths_m.iter_mut().for_each(|x| *x = v),
                        Axis::DelayLengthM => r.delay_length_m = v,
                        Axis::LossDbPerKm => r.loss_db_per_km = v,
                        Axis::MisalignmentRad => r.misalignment_rad = v,
                        Axis::ExtraTransmittance => r.extra_transmittance = v,
                        _ => unreachable!(),
                    }
                } else {
                    return Err(Error::Scenario(format!(
                        "axis `{}` needs a [loop] or [ring] scenario",
                        self.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| Error::UnknownAxis {
            axis: s.to_string(),
            available: Axis::ALL.map(Axis::name).join(", "),
        })
    }
}

/// `start:stop:n` (inclusive, evenly spaced) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: String| Error::param("grid", why);
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("`{}` is not a number", t.trim())))
            .and_then(|x| if x.is_finite() { Ok(x) } else { Err(bad(format!("`{x}` is not finite"))) })
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, n] => {
            let (a, b) = (num(start)?, num(stop)?);
            let n: usize = n.trim().parse().map_err(|_| bad(format!("`{}` is not a point count", n.trim())))?;
            match n {
                0 => return Err(bad("point count must be >= 1".into())),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            }
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad(format!("expected `start:stop:n` or `a,b,c`, got `{spec}`"))),
    };
    Ok(grid)
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub enum SweepResult {
    Sessions { axis: Axis, points: Vec<SweepPoint> },
    Fringe(Vec<FringePoint>),
}

/// Run the scenario at every grid value. All points share the scenario seed.
pub fn sweep(base: &Scenario, axis: Axis, grid: &[f64]) -> Result<SweepResult> {
    if axis == Axis::DeltaPhi {
        return Ok(SweepResult::Fringe(fringe(base, grid)?));
    }
    let base = base.clone().with_resolved_topology();
    let points = grid
        .iter()
        .map(|&value| {
            let mut s = base.clone();
            axis.apply(&mut s, value)?;
            s.validate()?;
            Ok(SweepPoint { value, report: run(&s)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::Sessions { axis, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.1, 0.2,0.5").unwrap(), vec![0.1, 0.2, 0.5]);
        assert_eq!(parse_grid("3:9:1").unwrap(), vec![3.0]);
        for bad in ["", "1:2", "a,b", "0:1:0", "0:1:x", "1:2:3:4", "nan"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn unknown_axis_lists_available() {
        let e = "length".parse::<Axis>().unwrap_err().to_string();
        assert!(e.contains("length") && e.contains("dark_prob") && e.contains("delta_phi"), "{e}");
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
    }

    #[test]
    fn sweep_shares_seed_and_tracks_axis() {
        let mut s = Scenario::default();
        s.protocol.pulses = 20_000;
        let SweepResult::Sessions { points, .. } = sweep(&s, Axis::Mu, &[0.1, 0.1, 0.5]).unwrap() else {
            panic!()
        };
        assert_eq!(points[0].report.stats, points[1].report.stats);
        assert!(points[2].report.stats.sifted_bits > points[0].report.stats.sifted_bits);
    }

    #[test]
    fn invalid_point_is_rejected() {
        let mut s = Scenario::default();
        s.protocol.pulses = 100;
        assert!(sweep(&s, Axis::Efficiency, &[0.5, 1.5]).is_err());
    }

    #[test]
    fn custom_loop_has_no_geometry_axes() {
        let mut s = Scenario::default();
        s.custom_loop = Some(super::super::CustomLoopSection {
            coupler_ratio: 0.5,
            group_index: 1.468,
            gate_window_s: 1e-8,
            source_pol: [1.0, 0.0, 0.0, 0.0],
            components: vec![],
        });
        assert!(Axis::DelayLengthM.apply(&mut s, 1.0).is_err());
    }
}
