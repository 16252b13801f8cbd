use serde::Serialize;

use super::compare::par_map;
use super::{run_scenario, HarnessError, Heating, Scenario, Setup};
use crate::hvac::{BetaSchedule, HvacError};

const SCALE_LO: f64 = 0.5;
const SCALE_HI: f64 = 2.0;
/// Required match of mean heating energy.
const ACCEPT: f64 = 0.01;
/// Bisection keeps going until the gap is this small.
const TARGET: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaCalibration {
    pub schedule: BetaSchedule,
    pub scale: f64,
    /// (eco − constant) / constant mean heating energy.
    pub gap: f64,
    pub mean_dahe_constant: f64,
    pub mean_dahe_eco: f64,
    pub evaluations: usize,
}

/// Chooses the schedule's scale so eco heating delivers the same mean
/// heating energy as constant heating over `scenarios`, keeping the
/// breakpoint shape.
pub fn calibrate_beta(
    base: &BetaSchedule,
    scenarios: &[Scenario],
    setup: &Setup,
    jobs: usize,
) -> Result<BetaCalibration, HarnessError> {
    if scenarios.is_empty() {
        return Err(HarnessError::EmptyInput("calibration scenario list"));
    }
    let mean_dahe = |runs: Vec<Result<f64, HarnessError>>| -> Result<f64, HarnessError> {
        let vals = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(vals.iter().sum::<f64>() / vals.len() as f64)
    };
    let constant: Vec<Scenario> = scenarios.iter().map(|s| s.with_heating(Heating::Constant)).collect();
    let eco: Vec<Scenario> = scenarios.iter().map(|s| s.with_heating(Heating::Eco)).collect();
    let reference = mean_dahe(par_map(&constant, jobs, |s| {
        run_scenario(s, setup).map(|r| r.report.e_dahe)
    }))?;

    let mut evaluations = 0;
    let mut eval = |scale: f64| -> Result<(f64, f64), HarnessError> {
        evaluations += 1;
        let mut trial = setup.clone();
        trial.controller.beta = base.with_scale(scale);
        let e = mean_dahe(par_map(&eco, jobs, |s| run_scenario(s, &trial).map(|r| r.report.e_dahe)))?;
        Ok(((e - reference) / reference, e))
    };

    let mut best = (base.scale, eval(base.scale)?);
    if best.1 .0.abs() > TARGET {
        let (mut lo, mut hi) = (SCALE_LO, SCALE_HI);
        let g_lo = eval(lo)?;
        let g_hi = eval(hi)?;
        for cand in [(lo, g_lo), (hi, g_hi)] {
            if cand.1 .0.abs() < best.1 .0.abs() {
                best = cand;
            }
        }
        if g_lo.0 > ACCEPT || g_hi.0 < -ACCEPT {
            return Err(HarnessError::Calibration(HvacError::NoBracket {
                lo,
                hi,
                gap_lo: g_lo.0,
                gap_hi: g_hi.0,
                best_scale: best.0,
                best_gap: best.1 .0,
            }));
        }
        for _ in 0..60 {
            if best.1 .0.abs() <= TARGET || hi - lo < 1e-9 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let g = eval(mid)?;
            if g.0.abs() < best.1 .0.abs() {
                best = (mid, g);
            }
            if g.0 < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if best.1 .0.abs() > ACCEPT {
            return Err(HarnessError::Calibration(HvacError::NoBracket {
                lo: SCALE_LO,
                hi: SCALE_HI,
                gap_lo: g_lo.0,
                gap_hi: g_hi.0,
                best_scale: best.0,
                best_gap: best.1 .0,
            }));
        }
    }
    let (scale, (gap, eco_mean)) = best;
    Ok(BetaCalibration {
        schedule: base.with_scale(scale),
        scale,
        gap,
        mean_dahe_constant: reference,
        mean_dahe_eco: eco_mean,
        evaluations,
    })
}
