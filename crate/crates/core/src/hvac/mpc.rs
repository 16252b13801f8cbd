//! Predictive heating-power tracker. The coolant temperature is frozen at
//! its measurement over the horizon, so the target power is constant and
//! only the speed-indexed multiplier varies along the preview.

use serde::{Deserialize, Serialize};

use super::{
    target_dahp, vent_air_temp, BlowerMap, ControllerParams, HvacCommand, HvacError, T_SP_MAX,
    T_SP_MIN,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcConfig {
    /// Prediction horizon in steps; the preview spans `N_p + 1` samples.
    #[serde(rename = "N_p")]
    pub n_p: usize,
    pub dt: f64,
    #[serde(rename = "T_sp_grid_step")]
    pub t_sp_grid_step: f64,
    /// Weight on command changes between steps; zero decouples the steps.
    pub rate_penalty: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            n_p: 30,
            dt: 1.0,
            t_sp_grid_step: 0.25,
            rate_penalty: 0.0,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), HvacError> {
        let bad = |m: &str| Err(HvacError::InvalidConfig(m.to_string()));
        if self.n_p < 1 {
            return bad("N_p must be at least 1");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        let cells = (T_SP_MAX - T_SP_MIN) / self.t_sp_grid_step;
        if !(self.t_sp_grid_step > 0.0) || (cells - cells.round()).abs() > 1e-9 {
            return bad("T_sp_grid_step must divide the 18..24 °C range");
        }
        if !(self.rate_penalty >= 0.0) {
            return bad("rate_penalty must be >= 0");
        }
        Ok(())
    }

    fn t_sp_grid(&self) -> impl Iterator<Item = f64> + '_ {
        let n = ((T_SP_MAX - T_SP_MIN) / self.t_sp_grid_step).round() as usize;
        (0..=n).map(move |i| T_SP_MIN + i as f64 * self.t_sp_grid_step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MpcStatus {
    Optimal,
    /// Vent air is no warmer than ambient anywhere in the box; the minimum
    /// command was returned.
    DegenerateVent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpcSolution {
    pub command: HvacCommand,
    pub status: MpcStatus,
    /// Baseline heating power at the measured coolant temperature, W.
    pub target: f64,
    /// Multiplied target the first step tracks, W.
    pub goal: f64,
    /// Heating power the command delivers at the measured state, W.
    pub predicted_dahp: f64,
}

struct Candidate {
    t_sp: f64,
    mdot: f64,
    power: f64,
}

/// Best single-step command for tracking `goal` watts.
pub fn solve_step(
    goal: f64,
    t_cl: f64,
    t_amb: f64,
    params: &ControllerParams,
) -> (HvacCommand, MpcStatus) {
    let map = &params.blower;
    let (m_lo, m_hi) = (map.min_flow(), map.max_flow());
    let tol = 1e-9 * goal.abs().max(1.0);
    let mut best: Option<(f64, Candidate)> = None;
    let mut any_heat = false;

    for t_sp in params.mpc.t_sp_grid() {
        let k = params.c_p * (vent_air_temp(t_sp, t_cl, &params.alpha) - t_amb);
        let mdot = if k > 0.0 {
            any_heat = true;
            (goal / k).clamp(m_lo, m_hi)
        } else {
            m_lo
        };
        let power = k * mdot;
        let residual = (power - goal).abs();
        let better = match &best {
            None => true,
            Some((r, c)) => {
                residual < r - tol || (residual <= r + tol && mdot < c.mdot - 1e-15)
            }
        };
        if better {
            best = Some((residual, Candidate { t_sp, mdot, power }));
        }
    }
    if !any_heat {
        let cmd = HvacCommand {
            t_sp: T_SP_MIN,
            w_bl: BlowerMap::W_MIN,
        };
        return (cmd, MpcStatus::DegenerateVent);
    }
    let (_, c) = best.expect("grid is nonempty");
    debug_assert!(c.power.is_finite());
    let cmd = HvacCommand {
        t_sp: c.t_sp,
        w_bl: map.duty_for(c.mdot),
    };
    (cmd, MpcStatus::Optimal)
}

/// One receding-horizon step. `preview` holds planned speeds from the
/// current step on; entries past `N_p` are ignored.
pub fn mpc_step(
    t_cl_meas: f64,
    t_amb: f64,
    preview: &[f64],
    params: &ControllerParams,
    prev_cmd: &HvacCommand,
) -> Result<MpcSolution, HvacError> {
    if preview.is_empty() {
        return Err(HvacError::InvalidConfig("speed preview is empty".into()));
    }
    if !t_cl_meas.is_finite() {
        return Err(HvacError::InvalidConfig("coolant temperature is not finite".into()));
    }
    let target = target_dahp(t_cl_meas, t_amb, &params.alpha, &params.blower, params.c_p);
    let goal = params.beta.eval(preview[0]) * target;
    let (command, status) = if params.mpc.rate_penalty == 0.0 {
        solve_step(goal, t_cl_meas, t_amb, params)
    } else {
        let horizon = &preview[..preview.len().min(params.mpc.n_p + 1)];
        let (_, status) = solve_step(goal, t_cl_meas, t_amb, params);
        let cmd = match status {
            MpcStatus::Optimal => solve_coupled(t_cl_meas, t_amb, horizon, target, params, prev_cmd),
            MpcStatus::DegenerateVent => HvacCommand {
                t_sp: T_SP_MIN,
                w_bl: BlowerMap::W_MIN,
            },
        };
        (cmd, status)
    };
    let predicted_dahp = params.command_dahp(&command, t_cl_meas, t_amb)?;
    Ok(MpcSolution {
        command,
        status,
        target,
        goal,
        predicted_dahp,
    })
}

/// Dynamic program over a coarse input lattice (1 °C by 5 %) when command
/// changes are penalised.
fn solve_coupled(
    t_cl: f64,
    t_amb: f64,
    preview: &[f64],
    target: f64,
    params: &ControllerParams,
    prev: &HvacCommand,
) -> HvacCommand {
    let states: Vec<HvacCommand> = (0..=6)
        .flat_map(|i| {
            (0..=12).map(move |j| HvacCommand {
                t_sp: T_SP_MIN + i as f64,
                w_bl: BlowerMap::W_MIN + 5.0 * j as f64,
            })
        })
        .collect();
    let power: Vec<f64> = states
        .iter()
        .map(|s| params.command_dahp(s, t_cl, t_amb).expect("lattice lies in the box"))
        .collect();
    let weight = params.mpc.rate_penalty * target.max(1.0).powi(2);
    let pen = |a: &HvacCommand, b: &HvacCommand| {
        weight * (((a.t_sp - b.t_sp) / 6.0).powi(2) + ((a.w_bl - b.w_bl) / 60.0).powi(2))
    };
    let stage = |i: usize, s: usize| {
        let goal = params.beta.eval(preview[i]) * target;
        (power[s] - goal).powi(2)
    };

    let last = preview.len() - 1;
    let mut value: Vec<f64> = (0..states.len()).map(|s| stage(last, s)).collect();
    for i in (0..last).rev() {
        value = (0..states.len())
            .map(|s| {
                let tail = (0..states.len())
                    .map(|n| pen(&states[s], &states[n]) + value[n])
                    .fold(f64::INFINITY, f64::min);
                stage(i, s) + tail
            })
            .collect();
    }
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for (s, st) in states.iter().enumerate() {
        let c = pen(prev, st) + value[s];
        if c < best_cost {
            best_cost = c;
            best = s;
        }
    }
    states[best]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hvac::{AlphaCoeffs, BetaSchedule};

    fn flat_beta(b: f64) -> BetaSchedule {
        BetaSchedule {
            speed_mps: vec![0.0, 10.0],
            beta: vec![b, b],
            scale: 1.0,
        }
    }

    #[test]
    fn identity_alpha_tracks_target_exactly() {
        let params = ControllerParams {
            beta: flat_beta(1.0),
            alpha: AlphaCoeffs::identity(),
            ..ControllerParams::default()
        };
        let sol = mpc_step(70.0, 0.0, &[10.0; 31], &params, &super::super::constant_heating()).unwrap();
        assert_eq!(sol.status, MpcStatus::Optimal);
        assert!((sol.predicted_dahp - sol.target).abs() <= 1e-9 * sol.target);
        assert!(sol.command.is_within_box());
    }

    #[test]
    fn stop_throttles_and_speed_preheats() {
        let params = ControllerParams::default();
        let base = super::super::constant_heating();
        let stop = mpc_step(80.0, -5.0, &[0.0], &params, &base).unwrap();
        assert!(stop.predicted_dahp < stop.target);
        assert!(stop.command.w_bl < base.w_bl || stop.command.t_sp < base.t_sp);
        let fast = mpc_step(80.0, -5.0, &[17.9], &params, &base).unwrap();
        assert!(fast.predicted_dahp > fast.target);
    }

    #[test]
    fn cold_vent_is_degenerate() {
        let params = ControllerParams {
            alpha: AlphaCoeffs::identity(),
            ..ControllerParams::default()
        };
        let sol = mpc_step(60.0, 30.0, &[5.0], &params, &super::super::constant_heating()).unwrap();
        assert_eq!(sol.status, MpcStatus::DegenerateVent);
        assert_eq!((sol.command.t_sp, sol.command.w_bl), (18.0, 10.0));
    }

    #[test]
    fn rate_penalty_holds_command() {
        let mut params = ControllerParams::default();
        params.mpc.rate_penalty = 1e3;
        let prev = HvacCommand { t_sp: 21.0, w_bl: 30.0 };
        let sol = mpc_step(80.0, -5.0, &[0.0; 31], &params, &prev).unwrap();
        assert_eq!((sol.command.t_sp, sol.command.w_bl), (21.0, 30.0));
        params.mpc.rate_penalty = 1e-9;
        let sol = mpc_step(80.0, -5.0, &[0.0; 31], &params, &prev).unwrap();
        assert!(sol.predicted_dahp < sol.target);
    }

    #[test]
    fn empty_preview_is_rejected() {
        let params = ControllerParams::default();
        assert!(mpc_step(80.0, 0.0, &[], &params, &super::super::constant_heating()).is_err());
    }

    #[test]
    fn grid_step_must_divide_range() {
        let c = MpcConfig { t_sp_grid_step: 0.7, ..MpcConfig::default() };
        assert!(c.validate().is_err());
    }
}
