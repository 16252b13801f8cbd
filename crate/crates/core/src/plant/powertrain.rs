use serde::{Deserialize, Serialize};

use super::{invalid, PlantError, PlantState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowertrainParams {
    /// Usable battery energy, J.
    #[serde(rename = "E_batt")]
    pub e_batt: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Traction demand above which the engine runs, W.
    pub engine_on_power: f64,
    /// Coolant temperature below which the engine idles for heat, °C.
    #[serde(rename = "T_cl_idle_on")]
    pub t_cl_idle_on: f64,
    /// Coolant temperature releasing a heat idle, °C.
    #[serde(rename = "T_cl_idle_off")]
    pub t_cl_idle_off: f64,
    pub eta_eng: f64,
    pub eta_sys: f64,
    /// Fuel lower heating value, J/kg.
    #[serde(rename = "LHV")]
    pub lhv: f64,
    #[serde(rename = "AFR_stoich")]
    pub afr_stoich: f64,
    /// Fuel flow floor while the engine runs at light load, kg/s.
    pub idle_fuel_rate: f64,
    /// Battery charging power while idling, W.
    pub idle_charge_power: f64,
}

impl Default for PowertrainParams {
    fn default() -> Self {
        PowertrainParams {
            e_batt: 4.32e6,
            soc_min: 0.4,
            soc_max: 0.8,
            engine_on_power: 4000.0,
            t_cl_idle_on: 50.0,
            t_cl_idle_off: 65.0,
            eta_eng: 0.36,
            eta_sys: 0.30,
            lhv: 44.0e6,
            afr_stoich: 14.7,
            idle_fuel_rate: 2.5e-4,
            idle_charge_power: 2000.0,
        }
    }
}

impl PowertrainParams {
    /// Checks own invariants and the ordering against the thermostat.
    pub fn validate(&self, thermostat_open: f64) -> Result<(), PlantError> {
        const S: &str = "powertrain";
        if !(self.e_batt > 0.0) {
            return Err(invalid(S, "E_batt", "must be positive"));
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(invalid(S, "soc_min", "need 0 <= soc_min < soc_max <= 1"));
        }
        if self.engine_on_power < 0.0 {
            return Err(invalid(S, "engine_on_power", "must be >= 0"));
        }
        if !(self.t_cl_idle_on < self.t_cl_idle_off) {
            return Err(invalid(S, "T_cl_idle_on", "must be below T_cl_idle_off"));
        }
        if !(self.t_cl_idle_off < thermostat_open) {
            return Err(invalid(S, "T_cl_idle_off", "must be below thermal.thermostat_open"));
        }
        for (name, eta) in [("eta_eng", self.eta_eng), ("eta_sys", self.eta_sys)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(invalid(S, name, "must lie in (0, 1]"));
            }
        }
        if !(self.lhv > 0.0) {
            return Err(invalid(S, "LHV", "must be positive"));
        }
        if !(self.afr_stoich > 0.0) {
            return Err(invalid(S, "AFR_stoich", "must be positive"));
        }
        if self.idle_fuel_rate < 0.0 {
            return Err(invalid(S, "idle_fuel_rate", "must be >= 0"));
        }
        if self.idle_charge_power < 0.0 {
            return Err(invalid(S, "idle_charge_power", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EngineMode {
    Off,
    /// Engine carries the traction demand.
    Propulsion,
    /// Engine runs at light load for heat or charge, topping up the battery.
    Idle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowertrainStep {
    pub state: PlantState,
    pub mode: EngineMode,
    /// kg/s over the step.
    pub fuel_rate: f64,
    /// Chemical power of the burned fuel, W.
    pub fuel_power: f64,
    /// Power leaving the battery, W (negative when charging).
    pub battery_power: f64,
}

/// Rule-based power split for one step of length `dt`.
pub fn step_powertrain(
    state: &PlantState,
    p_dem: f64,
    pt: &PowertrainParams,
    dt: f64,
) -> Result<PowertrainStep, PlantError> {
    let heat_request = state.t_cl < pt.t_cl_idle_on
        || (state.heat_request && state.t_cl < pt.t_cl_idle_off);
    let propulsion = p_dem > pt.engine_on_power;
    let engine_on = propulsion || state.soc < pt.soc_min || heat_request;

    let (mode, fuel_rate, battery_power) = if !engine_on {
        (EngineMode::Off, 0.0, p_dem)
    } else if propulsion {
        (EngineMode::Propulsion, p_dem / (pt.eta_eng * pt.lhv), 0.0)
    } else {
        let charge = if state.soc < pt.soc_max {
            pt.idle_charge_power
        } else {
            0.0
        };
        let p_eng = p_dem.max(0.0) + charge;
        let fuel = pt.idle_fuel_rate.max(p_eng / (pt.eta_eng * pt.lhv));
        (EngineMode::Idle, fuel, p_dem.min(0.0) - charge)
    };

    let soc = state.soc - battery_power * dt / pt.e_batt;
    if !(0.0..=1.0).contains(&soc) {
        return Err(PlantError::SocOutOfRange {
            soc,
            t: state.t + dt,
        });
    }
    let next = PlantState {
        soc,
        engine_on,
        heat_request,
        fuel_mass: state.fuel_mass + fuel_rate * dt,
        last_mdot_air: fuel_rate * pt.afr_stoich,
        ..state.clone()
    };
    Ok(PowertrainStep {
        state: next,
        mode,
        fuel_rate,
        fuel_power: fuel_rate * pt.lhv,
        battery_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PowertrainParams {
        PowertrainParams {
            e_batt: 4.32e6,
            engine_on_power: 5000.0,
            t_cl_idle_on: 50.0,
            t_cl_idle_off: 65.0,
            ..PowertrainParams::default()
        }
    }

    #[test]
    fn warm_standstill_keeps_engine_off() {
        let s = PlantState::new(70.0, 20.0, 0.6);
        let out = step_powertrain(&s, 0.0, &params(), 1.0).unwrap();
        assert!(!out.state.engine_on);
        assert_eq!(out.state.fuel_mass, 0.0);
        assert_eq!(out.state.soc, 0.6);
    }

    #[test]
    fn cold_coolant_forces_idle_that_charges() {
        let s = PlantState::new(49.0, 20.0, 0.6);
        let out = step_powertrain(&s, 0.0, &params(), 1.0).unwrap();
        assert!(out.state.engine_on);
        assert_eq!(out.mode, EngineMode::Idle);
        assert!(out.state.fuel_mass > 0.0);
        assert!(out.state.soc > 0.6);
        assert!((out.state.last_mdot_air - out.fuel_rate * 14.7).abs() < 1e-15);
    }

    #[test]
    fn electric_drive_drains_battery() {
        let p = params();
        let mut s = PlantState::new(70.0, 20.0, 0.6);
        for _ in 0..100 {
            s = step_powertrain(&s, 3000.0, &p, 1.0).unwrap().state;
            assert!(!s.engine_on);
        }
        let expected = -3000.0 * 100.0 / 4.32e6;
        assert!((s.soc - 0.6 - expected).abs() < 1e-12);
        assert!((expected + 0.0694).abs() < 1e-4);
    }

    #[test]
    fn heat_idle_latches_until_release() {
        let p = params();
        let mut s = PlantState::new(49.0, 20.0, 0.6);
        s = step_powertrain(&s, 0.0, &p, 1.0).unwrap().state;
        assert!(s.heat_request);
        s.t_cl = 60.0;
        s = step_powertrain(&s, 0.0, &p, 1.0).unwrap().state;
        assert!(s.engine_on, "still below the release threshold");
        s.t_cl = 65.0;
        s = step_powertrain(&s, 0.0, &p, 1.0).unwrap().state;
        assert!(!s.engine_on);
        s.t_cl = 60.0;
        s = step_powertrain(&s, 0.0, &p, 1.0).unwrap().state;
        assert!(!s.engine_on, "no request between thresholds once released");
    }

    #[test]
    fn soc_overflow_is_reported() {
        let mut p = params();
        p.e_batt = 1000.0;
        let s = PlantState::new(70.0, 20.0, 0.01);
        let err = step_powertrain(&s, 3000.0, &p, 1.0).unwrap_err();
        assert!(matches!(err, PlantError::SocOutOfRange { .. }));
    }

    #[test]
    fn propulsion_burns_demand_fuel() {
        let p = params();
        let s = PlantState::new(85.0, 20.0, 0.6);
        let out = step_powertrain(&s, 18_000.0, &p, 1.0).unwrap();
        assert_eq!(out.mode, EngineMode::Propulsion);
        assert!((out.fuel_power - 18_000.0 / 0.36).abs() < 1e-6);
        assert_eq!(out.state.soc, 0.6);
    }

    #[test]
    fn validation_orders_thresholds() {
        assert!(PowertrainParams::default().validate(80.0).is_ok());
        assert!(PowertrainParams::default().validate(60.0).is_err());
        let mut p = params();
        p.soc_min = 0.9;
        assert!(p.validate(80.0).is_err());
    }
}
