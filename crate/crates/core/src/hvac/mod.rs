//! Cabin heating control: vent air model, discharge air heating power,
//! the constant baseline, and the predictive tracking controller.

mod fit;
mod mpc;
mod tables;

pub use fit::{fit_alpha, read_samples, AlphaFit, AlphaSample};
pub use mpc::{mpc_step, solve_step, MpcConfig, MpcSolution, MpcStatus};
pub use tables::{beta, blower_flow, BetaSchedule, BlowerMap, MPH};

pub use crate::harness::{calibrate_beta, BetaCalibration};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HvacError {
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("regression matrix is rank {rank} with {samples} samples; need rank 4")]
    RankDeficient { rank: usize, samples: usize },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("invalid coefficients: {0}")]
    InvalidAlpha(String),
    #[error("invalid controller setting: {0}")]
    InvalidConfig(String),
    #[error("calibration samples: {0}")]
    InvalidSamples(String),
    #[error(
        "no scale in [{lo}, {hi}] matches heating energy within 1 %: gaps {gap_lo:+.4} and {gap_hi:+.4} at the ends, best {best_gap:+.4} at scale {best_scale:.4}"
    )]
    NoBracket {
        lo: f64,
        hi: f64,
        gap_lo: f64,
        gap_hi: f64,
        best_scale: f64,
        best_gap: f64,
    },
}

pub const T_SP_MIN: f64 = 18.0;
pub const T_SP_MAX: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HvacCommand {
    /// Cabin setpoint, °C.
    #[serde(rename = "T_sp")]
    pub t_sp: f64,
    /// Blower duty, percent.
    #[serde(rename = "W_bl")]
    pub w_bl: f64,
}

impl HvacCommand {
    pub fn is_within_box(&self) -> bool {
        (T_SP_MIN..=T_SP_MAX).contains(&self.t_sp)
            && (BlowerMap::W_MIN..=BlowerMap::W_MAX).contains(&self.w_bl)
    }
}

/// Coefficients of the vent air temperature model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    #[serde(rename = "T_sp_floor", default = "default_floor")]
    pub t_sp_floor: f64,
}

fn default_floor() -> f64 {
    15.0
}

impl Default for AlphaCoeffs {
    /// Least-squares fit of `data/alpha_samples.csv`.
    fn default() -> Self {
        AlphaCoeffs {
            a1: 5.326_495_210_203_564,
            a2: 0.053_791_536_625_669_88,
            a3: -0.137_443_727_203_546_64,
            a4: -39.426_231_231_552_38,
            t_sp_floor: 15.0,
        }
    }
}

impl AlphaCoeffs {
    pub fn identity() -> Self {
        AlphaCoeffs {
            a1: 1.0,
            a2: 0.0,
            a3: 0.0,
            a4: 0.0,
            t_sp_floor: 15.0,
        }
    }

    /// Vent temperature must not fall as either input rises over the
    /// operating box; checked on a 0.5 °C by 1 °C grid.
    pub fn validate(&self) -> Result<(), HvacError> {
        if ![self.a1, self.a2, self.a3, self.a4, self.t_sp_floor]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(HvacError::InvalidAlpha("coefficients must be finite".into()));
        }
        for i in 0..=12 {
            let t_sp = T_SP_MIN + 0.5 * i as f64;
            for t_cl in (40..=90).map(f64::from) {
                let d_cl = self.a2 * (t_sp - self.t_sp_floor);
                let d_sp = self.a1 + self.a2 * t_cl + 2.0 * self.a3 * t_sp;
                if d_cl < 0.0 || d_sp < 0.0 {
                    return Err(HvacError::InvalidAlpha(format!(
                        "vent temperature decreases at T_sp = {t_sp}, T_cl = {t_cl}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn vent_air_temp(t_sp: f64, t_cl: f64, alpha: &AlphaCoeffs) -> f64 {
    alpha.a1 * t_sp + alpha.a2 * (t_sp - alpha.t_sp_floor) * t_cl + alpha.a3 * t_sp * t_sp + alpha.a4
}

/// Discharge air heating power, W. Negative when the vent air is colder
/// than ambient.
pub fn dahp(t_ain: f64, t_amb: f64, mdot_bl: f64, c_p: f64) -> f64 {
    c_p * (t_ain - t_amb) * mdot_bl
}

pub fn constant_heating() -> HvacCommand {
    HvacCommand {
        t_sp: 23.0,
        w_bl: 40.0,
    }
}

/// Everything the heating controller needs besides measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerParams {
    /// Specific heat of air, J/(kg·K).
    pub c_p: f64,
    pub beta: BetaSchedule,
    pub blower: BlowerMap,
    pub alpha: AlphaCoeffs,
    pub mpc: MpcConfig,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            c_p: 1005.0,
            beta: BetaSchedule::default(),
            blower: BlowerMap::default(),
            alpha: AlphaCoeffs::default(),
            mpc: MpcConfig::default(),
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), HvacError> {
        if !(self.c_p > 0.0) {
            return Err(HvacError::InvalidConfig("c_p must be positive".into()));
        }
        self.beta.validate()?;
        self.blower.validate()?;
        self.alpha.validate()?;
        self.mpc.validate()
    }

    /// Heating power of a command at coolant temperature `t_cl`.
    pub fn command_dahp(&self, cmd: &HvacCommand, t_cl: f64, t_amb: f64) -> Result<f64, HvacError> {
        let flow = self.blower.flow(cmd.w_bl)?;
        Ok(dahp(vent_air_temp(cmd.t_sp, t_cl, &self.alpha), t_amb, flow, self.c_p))
    }
}

/// Heating power the constant baseline delivers at coolant temperature `t_cl`.
pub fn target_dahp(t_cl: f64, t_amb: f64, alpha: &AlphaCoeffs, map: &BlowerMap, c_p: f64) -> f64 {
    let base = constant_heating();
    let flow = map.flow(base.w_bl).expect("baseline duty lies inside the map");
    dahp(vent_air_temp(base.t_sp, t_cl, alpha), t_amb, flow, c_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vent_model_identities() {
        let a = AlphaCoeffs {
            a1: 2.0,
            a2: 0.3,
            a3: -0.01,
            a4: 5.0,
            t_sp_floor: 15.0,
        };
        let at_floor = vent_air_temp(15.0, 77.0, &a);
        assert!((at_floor - (30.0 - 2.25 + 5.0)).abs() < 1e-12);
        assert_eq!(vent_air_temp(21.5, 60.0, &AlphaCoeffs::identity()), 21.5);
    }

    #[test]
    fn default_alpha_is_monotone_and_near_45() {
        let a = AlphaCoeffs::default();
        a.validate().unwrap();
        let t = vent_air_temp(23.0, 80.0, &a);
        assert!((t - 44.8).abs() < 1.0, "{t}");
    }

    #[test]
    fn rejects_decreasing_alpha() {
        let a = AlphaCoeffs {
            a2: -0.1,
            ..AlphaCoeffs::default()
        };
        assert!(a.validate().is_err());
    }

    #[test]
    fn dahp_is_bilinear() {
        assert_eq!(dahp(5.0, 5.0, 0.1, 1005.0), 0.0);
        assert!((dahp(40.0, 0.0, 0.05, 1005.0) - 2010.0).abs() < 1e-9);
        assert!((dahp(40.0, 0.0, 0.1, 1005.0) - 2.0 * dahp(40.0, 0.0, 0.05, 1005.0)).abs() < 1e-9);
        assert!(dahp(10.0, 20.0, 0.05, 1005.0) < 0.0);
    }

    #[test]
    fn baseline_command_and_target() {
        let c = constant_heating();
        assert_eq!((c.t_sp, c.w_bl), (23.0, 40.0));
        assert!(c.is_within_box());
        let map = BlowerMap::default();
        assert!((map.flow(c.w_bl).unwrap() - 0.08).abs() < 1e-15);
        let p = target_dahp(70.0, 0.0, &AlphaCoeffs::identity(), &map, 1005.0);
        assert!((p - 1849.2).abs() < 1e-9);
        assert_eq!(target_dahp(70.0, 23.0, &AlphaCoeffs::identity(), &map, 1005.0), 0.0);
        let a = AlphaCoeffs::default();
        let mut last = f64::NEG_INFINITY;
        for t_cl in (40..=90).map(f64::from) {
            let p = target_dahp(t_cl, -5.0, &a, &map, 1005.0);
            assert!(p >= last);
            last = p;
        }
    }
}
