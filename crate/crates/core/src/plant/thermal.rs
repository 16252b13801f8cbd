use serde::{Deserialize, Serialize};

use super::{invalid, PlantError, PlantState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalParams {
    /// Lumped coolant m·c, J/K.
    pub coolant_heat_capacity: f64,
    /// Lumped cabin m·c, J/K.
    pub cabin_heat_capacity: f64,
    #[serde(rename = "cabin_UA")]
    pub cabin_ua: f64,
    #[serde(rename = "radiator_UA")]
    pub radiator_ua: f64,
    /// °C
    pub thermostat_open: f64,
    /// Share of fuel power absorbed by the coolant.
    pub engine_heat_fraction: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        ThermalParams {
            coolant_heat_capacity: 20_000.0,
            cabin_heat_capacity: 80_000.0,
            cabin_ua: 40.0,
            radiator_ua: 300.0,
            thermostat_open: 80.0,
            engine_heat_fraction: 0.30,
        }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        const S: &str = "thermal";
        for (name, x) in [
            ("coolant_heat_capacity", self.coolant_heat_capacity),
            ("cabin_heat_capacity", self.cabin_heat_capacity),
            ("cabin_UA", self.cabin_ua),
            ("radiator_UA", self.radiator_ua),
            ("thermostat_open", self.thermostat_open),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(invalid(S, name, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.engine_heat_fraction) {
            return Err(invalid(S, "engine_heat_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

pub fn engine_heat(fuel_power: f64, tp: &ThermalParams) -> f64 {
    tp.engine_heat_fraction * fuel_power
}

/// Heat flows applied over one thermal step, W.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeatFlux {
    pub engine: f64,
    pub radiator: f64,
    pub heater: f64,
    pub cabin_loss: f64,
}

impl HeatFlux {
    /// Net power into the coolant.
    pub fn coolant_net(&self) -> f64 {
        self.engine - self.radiator - self.heater
    }
}

/// Explicit-Euler step of the coolant and cabin nodes. Also advances the
/// clock by `dt`.
pub fn step_thermal(
    state: &PlantState,
    q_engine: f64,
    q_heater: f64,
    t_amb: f64,
    tp: &ThermalParams,
    dt: f64,
) -> (PlantState, HeatFlux) {
    let radiator = if state.t_cl >= tp.thermostat_open {
        tp.radiator_ua * (state.t_cl - t_amb)
    } else {
        0.0
    };
    let flux = HeatFlux {
        engine: q_engine,
        radiator,
        heater: q_heater,
        cabin_loss: tp.cabin_ua * (state.t_cab - t_amb),
    };
    let next = PlantState {
        t: state.t + dt,
        t_cl: state.t_cl + dt * flux.coolant_net() / tp.coolant_heat_capacity,
        t_cab: state.t_cab + dt * (q_heater - flux.cabin_loss) / tp.cabin_heat_capacity,
        ..state.clone()
    };
    (next, flux)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_coolant_holds_temperature() {
        let s = PlantState::new(60.0, 10.0, 0.6);
        let (n, _) = step_thermal(&s, 0.0, 0.0, -10.0, &ThermalParams::default(), 1.0);
        assert_eq!(n.t_cl, 60.0);
        assert_eq!(n.t, 1.0);
    }

    #[test]
    fn net_flux_over_capacity() {
        let tp = ThermalParams {
            coolant_heat_capacity: 60_000.0,
            ..ThermalParams::default()
        };
        let s = PlantState::new(60.0, 10.0, 0.6);
        let (n, _) = step_thermal(&s, 5000.0, 2000.0, 0.0, &tp, 1.0);
        assert!((n.t_cl - 60.05).abs() < 1e-12);
    }

    #[test]
    fn radiator_opens_at_thermostat() {
        let tp = ThermalParams {
            radiator_ua: 300.0,
            thermostat_open: 80.0,
            ..ThermalParams::default()
        };
        let s = PlantState::new(85.0, 10.0, 0.6);
        let (_, f) = step_thermal(&s, 0.0, 0.0, 0.0, &tp, 1.0);
        assert!((f.radiator - 25_500.0).abs() < 1e-9);
        let s = PlantState::new(79.9, 10.0, 0.6);
        let (_, f) = step_thermal(&s, 0.0, 0.0, 0.0, &tp, 1.0);
        assert_eq!(f.radiator, 0.0);
    }

    #[test]
    fn heater_warms_cabin() {
        let tp = ThermalParams::default();
        let s = PlantState::new(85.0, 10.0, 0.6);
        let (n, f) = step_thermal(&s, 0.0, 4000.0, 10.0, &tp, 1.0);
        assert_eq!(f.cabin_loss, 0.0);
        assert!((n.t_cab - (10.0 + 4000.0 / tp.cabin_heat_capacity)).abs() < 1e-12);
    }

    #[test]
    fn engine_heat_fraction() {
        let tp = ThermalParams {
            engine_heat_fraction: 0.3,
            ..ThermalParams::default()
        };
        assert_eq!(engine_heat(0.0, &tp), 0.0);
        assert!((engine_heat(20_000.0, &tp) - 6000.0).abs() < 1e-9);
        let bad = ThermalParams {
            engine_heat_fraction: 1.5,
            ..ThermalParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
