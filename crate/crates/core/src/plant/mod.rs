//! Lumped hybrid plant: road-load traction demand, a rule-based power split,
//! battery state of charge, fuel, and the coolant/cabin heat balance.

mod powertrain;
mod thermal;

pub use powertrain::{step_powertrain, EngineMode, PowertrainParams, PowertrainStep};
pub use thermal::{engine_heat, step_thermal, HeatFlux, ThermalParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("state of charge would leave [0, 1]: {soc:.6} at t = {t:.1} s")]
    SocOutOfRange { soc: f64, t: f64 },
    #[error("{section}.{field}: {reason}")]
    InvalidParameter {
        section: &'static str,
        field: &'static str,
        reason: String,
    },
}

pub(crate) fn invalid(section: &'static str, field: &'static str, reason: &str) -> PlantError {
    PlantError::InvalidParameter {
        section,
        field,
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    pub mass: f64,
    /// Constant road-load term, N.
    #[serde(rename = "A")]
    pub road_load_a: f64,
    /// Linear road-load term, N/(m/s).
    #[serde(rename = "B")]
    pub road_load_b: f64,
    /// Quadratic road-load term, N/(m/s)^2.
    #[serde(rename = "C")]
    pub road_load_c: f64,
    pub driveline_eff: f64,
    /// Share of negative wheel power recovered into the battery.
    pub regen_fraction: f64,
    /// Largest recovered power, W.
    pub regen_limit: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            mass: 1530.0,
            road_load_a: 110.0,
            road_load_b: 1.0,
            road_load_c: 0.33,
            driveline_eff: 0.9,
            regen_fraction: 0.5,
            regen_limit: 25_000.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        const S: &str = "vehicle";
        if !(self.mass > 0.0) {
            return Err(invalid(S, "mass", "must be positive"));
        }
        if self.road_load_a < 0.0 || self.road_load_b < 0.0 || self.road_load_c < 0.0 {
            return Err(invalid(S, "A", "road-load coefficients must be >= 0"));
        }
        if !(self.driveline_eff > 0.0 && self.driveline_eff <= 1.0) {
            return Err(invalid(S, "driveline_eff", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.regen_fraction) {
            return Err(invalid(S, "regen_fraction", "must lie in [0, 1]"));
        }
        if self.regen_limit < 0.0 {
            return Err(invalid(S, "regen_limit", "must be >= 0"));
        }
        Ok(())
    }

    pub fn road_load(&self, v: f64) -> f64 {
        self.road_load_a + self.road_load_b * v + self.road_load_c * v * v
    }
}

/// Power drawn from the powertrain at the wheels' request. Positive values
/// include driveline losses; negative values are the recoverable share.
pub fn traction_power(v: f64, accel: f64, p: &VehicleParams) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let wheel = (p.road_load(v) + p.mass * accel) * v;
    if wheel >= 0.0 {
        wheel / p.driveline_eff
    } else {
        (wheel * p.regen_fraction).max(-p.regen_limit)
    }
}

/// Instantaneous plant state, a value stepped by pure transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub t: f64,
    pub v: f64,
    pub t_cl: f64,
    pub t_cab: f64,
    pub soc: f64,
    pub engine_on: bool,
    /// Cumulative fuel burned, kg.
    pub fuel_mass: f64,
    pub last_mdot_air: f64,
    /// Coolant-temperature engine request, latched between the idle
    /// on/off thresholds.
    pub heat_request: bool,
}

impl PlantState {
    pub fn new(t_cl: f64, t_cab: f64, soc: f64) -> Self {
        PlantState {
            t: 0.0,
            v: 0.0,
            t_cl,
            t_cab,
            soc,
            engine_on: false,
            fuel_mass: 0.0,
            last_mdot_air: 0.0,
            heat_request: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> VehicleParams {
        VehicleParams {
            mass: 1500.0,
            road_load_a: 120.0,
            road_load_b: 1.0,
            road_load_c: 0.4,
            driveline_eff: 0.9,
            regen_fraction: 0.5,
            regen_limit: 20_000.0,
        }
    }

    #[test]
    fn standstill_draws_nothing() {
        for a in [-3.0, 0.0, 2.0] {
            assert_eq!(traction_power(0.0, a, &params()), 0.0);
        }
    }

    #[test]
    fn cruise_power() {
        let p = traction_power(10.0, 0.0, &params());
        assert!((p - 1700.0 / 0.9).abs() < 1e-9);
        let mut heavy = params();
        heavy.mass = 9000.0;
        assert_eq!(traction_power(10.0, 0.0, &heavy), p);
    }

    #[test]
    fn braking_regenerates_up_to_the_limit() {
        let p = params();
        let gentle = traction_power(10.0, -0.5, &p);
        assert!((gentle - (1700.0 - 7500.0) * 0.5).abs() < 1e-9);
        let hard = traction_power(15.0, -3.0, &p);
        assert_eq!(hard, -20_000.0);
    }

    #[test]
    fn validation() {
        assert!(VehicleParams::default().validate().is_ok());
        let mut p = params();
        p.driveline_eff = 1.2;
        assert!(p.validate().is_err());
    }
}
