//! Derivative-free alignment of a three-waveplate polarization controller.

use std::f64::consts::{PI, TAU};

use super::PcSetting;
use crate::error::{Error, Result};

const COARSE_POINTS: usize = 32;
const MAX_SWEEPS: usize = 200;
const GOLDEN_BRACKET_TOL: f64 = 1e-11;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximize `objective` over controller settings.
///
/// Coordinate ascent over the three angles. Each line search scans the full
/// period on a coarse grid, then refines around the best grid point with a
/// golden-section search. The ascent is run from `initial` and from the eight
/// points of the lattice `{π/2, 3π/2}³`; the best result wins. Sweeps stop once
/// a full pass improves the objective by less than `tol / 100`.
pub fn optimize_pc<F>(objective: F, initial: PcSetting, tol: f64) -> Result<PcSetting>
where
    F: Fn(&PcSetting) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let eval = |s: &PcSetting| -> Result<f64> {
        let v = objective(s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteObjective {
                value: v,
                setting: s.angles(),
            })
        }
    };

    let mut seeds = vec![initial];
    for i in 0..8 {
        let pick = |bit: usize| if (i >> bit) & 1 == 0 { PI / 2.0 } else { 3.0 * PI / 2.0 };
        seeds.push(PcSetting::new(pick(0), pick(1), pick(2)));
    }

    let mut best: Option<(PcSetting, f64)> = None;
    for seed in seeds {
        let (s, v) = ascend(&eval, seed, tol)?;
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((s, v));
        }
    }
    Ok(best.expect("at least one seed").0)
}

fn ascend<F>(eval: &F, start: PcSetting, tol: f64) -> Result<(PcSetting, f64)>
where
    F: Fn(&PcSetting) -> Result<f64>,
{
    let mut x = start;
    let mut fx = eval(&x)?;
    for _ in 0..MAX_SWEEPS {
        let before = fx;
        for axis in 0..3 {
            let (cand, fc) = line_search(eval, &x, axis)?;
            if fc > fx {
                x = cand;
                fx = fc;
            }
        }
        if fx - before < tol / 100.0 {
            break;
        }
    }
    Ok((x, fx))
}

fn line_search<F>(eval: &F, x: &PcSetting, axis: usize) -> Result<(PcSetting, f64)>
where
    F: Fn(&PcSetting) -> Result<f64>,
{
    let step = TAU / COARSE_POINTS as f64;
    let at = |t: f64| x.with_angle(axis, t);

    let mut best_t = x.angles()[axis];
    let mut best_f = eval(x)?;
    for k in 0..COARSE_POINTS {
        let t = k as f64 * step;
        let f = eval(&at(t))?;
        if f > best_f {
            best_t = t;
            best_f = f;
        }
    }

    // golden-section refinement on [best_t - step, best_t + step]
    let (mut a, mut b) = (best_t - step, best_t + step);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(&at(c))?;
    let mut fd = eval(&at(d))?;
    while b - a > GOLDEN_BRACKET_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(&at(c))?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(&at(d))?;
        }
    }
    for (t, f) in [(c, fc), (d, fd)] {
        if f > best_f {
            best_t = t;
            best_f = f;
        }
    }
    Ok((at(best_t), best_f))
}
