//! Closed-loop experiments: planned speed, driver, plant and heating
//! controller stepped together, plus paired comparisons and sweeps.

mod calibrate;
mod compare;
mod driver;

pub use calibrate::{calibrate_beta, BetaCalibration};
pub use compare::{
    ambient_group, compare, sweep_ambient, write_comparison_csv, AmbientGroup, ComparisonRow,
    ComparisonTable, GroupSummary, COMPARISON_HEADER,
};
pub use driver::{apply_driver, tracking_stats, DriverParams};

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{EnergyError, EnergyReport, LogRow, IDLE_SPEED_MPS};
use crate::hvac::{
    constant_heating, dahp, mpc_step, vent_air_temp, ControllerParams, HvacCommand, HvacError,
    MpcStatus,
};
use crate::plant::{
    engine_heat, step_powertrain, step_thermal, traction_power, PlantError, PlantState,
    PowertrainParams, ThermalParams, VehicleParams,
};
use crate::traffic::{
    plan_eco_trajectory, plan_normal_trajectory, Corridor, PlannerLimits, SpeedProfile,
    TrafficError,
};

pub const SERIES_HEADER: &str = "t_s,v_cmd_mps,v_mps,T_cl_C,T_cab_C,soc,engine_on,P_DAHP_W,T_sp_C,W_bl_pct";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario {scenario}: {source}")]
    Traffic {
        scenario: String,
        #[source]
        source: TrafficError,
    },
    #[error("scenario {scenario}: {source}")]
    Plant {
        scenario: String,
        #[source]
        source: PlantError,
    },
    #[error("scenario {scenario}: {source}")]
    Hvac {
        scenario: String,
        #[source]
        source: HvacError,
    },
    #[error("scenario {scenario}: planned profile has {found} intermediate stop(s); cannot extend stop {index}")]
    NoStopToExtend {
        scenario: String,
        index: usize,
        found: usize,
    },
    #[error("scenarios are not comparable: {0}")]
    IncomparableScenarios(String),
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Calibration(HvacError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

impl HarnessError {
    /// Failures caused by the scenario being impossible rather than by bad
    /// input files.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            HarnessError::Traffic {
                source: TrafficError::InfeasibleCorridor { .. },
                ..
            } | HarnessError::Plant {
                source: PlantError::SocOutOfRange { .. },
                ..
            } | HarnessError::NoStopToExtend { .. }
                | HarnessError::Calibration(HvacError::NoBracket { .. })
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Driving {
    Normal,
    Eco,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heating {
    Constant,
    Eco,
}

fn default_cab0() -> f64 {
    14.0
}
fn default_cl0() -> f64 {
    85.0
}
fn default_soc0() -> f64 {
    0.6
}

/// One experiment of the test matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub driving: Driving,
    pub heating: Heating,
    #[serde(rename = "T_amb_C")]
    pub t_amb: f64,
    #[serde(rename = "T_cab0_C", default = "default_cab0")]
    pub t_cab0: f64,
    #[serde(rename = "T_cl0_C", default = "default_cl0")]
    pub t_cl0: f64,
    #[serde(default = "default_soc0")]
    pub soc0: f64,
    #[serde(default)]
    pub seed: u64,
    /// Lengthen one planned stop (see [`LongStop`]).
    #[serde(default)]
    pub long_stop: bool,
}

impl Scenario {
    pub fn new(name: &str, driving: Driving, heating: Heating, t_amb: f64) -> Self {
        Scenario {
            name: name.to_string(),
            driving,
            heating,
            t_amb,
            t_cab0: default_cab0(),
            t_cl0: default_cl0(),
            soc0: default_soc0(),
            seed: 0,
            long_stop: false,
        }
    }

    pub fn with_heating(&self, heating: Heating) -> Self {
        Scenario {
            heating,
            ..self.clone()
        }
    }

    pub fn with_driving(&self, driving: Driving) -> Self {
        Scenario {
            driving,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Scenario {
            seed,
            ..self.clone()
        }
    }

    pub fn with_ambient(&self, t_amb: f64) -> Self {
        Scenario {
            t_amb,
            ..self.clone()
        }
    }
}

/// Which planned stop the long-stop variant extends, and by how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LongStop {
    /// 1-based index among the intermediate stops.
    pub stop_index: usize,
    pub extra_s: f64,
}

impl Default for LongStop {
    fn default() -> Self {
        LongStop {
            stop_index: 3,
            extra_s: 100.0,
        }
    }
}

/// Parameters shared by every scenario of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub corridor: Corridor,
    pub limits: PlannerLimits,
    pub vehicle: VehicleParams,
    pub thermal: ThermalParams,
    pub powertrain: PowertrainParams,
    pub controller: ControllerParams,
    pub driver: DriverParams,
    pub long_stop: LongStop,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            corridor: Corridor::default_arterial(),
            limits: PlannerLimits::default(),
            vehicle: VehicleParams::default(),
            thermal: ThermalParams::default(),
            powertrain: PowertrainParams::default(),
            controller: ControllerParams::default(),
            driver: DriverParams::default(),
            long_stop: LongStop::default(),
        }
    }
}

/// A planned stop of the commanded profile, in run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopWindow {
    pub start: f64,
    pub end: f64,
    pub extended: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub v_cmd: Vec<f64>,
    pub v: Vec<f64>,
    pub t_cl: Vec<f64>,
    pub t_cab: Vec<f64>,
    pub soc: Vec<f64>,
    pub engine_on: Vec<bool>,
    pub p_dahp: Vec<f64>,
    pub command: Vec<HvacCommand>,
}

impl TimeSeries {
    fn push(&mut self, t: f64, v_cmd: f64, s: &PlantState, engine_on: bool, p: f64, cmd: HvacCommand) {
        self.t.push(t);
        self.v_cmd.push(v_cmd);
        self.v.push(s.v);
        self.t_cl.push(s.t_cl);
        self.t_cab.push(s.t_cab);
        self.soc.push(s.soc);
        self.engine_on.push(engine_on);
        self.p_dahp.push(p);
        self.command.push(cmd);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub scenario: Scenario,
    #[serde(skip)]
    pub corridor: Corridor,
    pub series: TimeSeries,
    pub report: EnergyReport,
    #[serde(skip)]
    pub log: Vec<LogRow>,
    /// Relative mismatch between the coolant's stored heat and the
    /// integrated heat flows.
    pub coolant_closure: f64,
    pub stops: Vec<StopWindow>,
    /// Steps where the heating controller found no usable vent temperature.
    pub degenerate_steps: usize,
    pub dt: f64,
}

impl RunResult {
    /// Engine-on seconds at standstill within `[start, end)`.
    pub fn idle_seconds_between(&self, start: f64, end: f64) -> f64 {
        let s = &self.series;
        (0..s.len().saturating_sub(1))
            .filter(|&k| {
                s.t[k] >= start && s.t[k] < end && s.v[k].max(s.v[k + 1]) < IDLE_SPEED_MPS && s.engine_on[k]
            })
            .count() as f64
            * self.dt
    }

    pub fn extended_stop(&self) -> Option<StopWindow> {
        self.stops.iter().copied().find(|s| s.extended)
    }

    pub fn write_series_csv<W: Write>(&self, out: W) -> Result<(), EnergyError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SERIES_HEADER.split(','))?;
        let s = &self.series;
        for k in 0..s.len() {
            w.write_record([
                s.t[k].to_string(),
                s.v_cmd[k].to_string(),
                s.v[k].to_string(),
                s.t_cl[k].to_string(),
                s.t_cab[k].to_string(),
                s.soc[k].to_string(),
                u8::from(s.engine_on[k]).to_string(),
                s.p_dahp[k].to_string(),
                s.command[k].t_sp.to_string(),
                s.command[k].w_bl.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Commanded speed for a scenario and the stop windows it contains.
pub fn planned_profile(s: &Scenario, setup: &Setup) -> Result<(SpeedProfile, Vec<StopWindow>), HarnessError> {
    let traffic = |source| HarnessError::Traffic {
        scenario: s.name.clone(),
        source,
    };
    let mut profile = match s.driving {
        Driving::Eco => plan_eco_trajectory(&setup.corridor, 0.0, 0.0, &setup.limits),
        Driving::Normal => plan_normal_trajectory(&setup.corridor, 0.0, 0.0, &setup.limits),
    }
    .map_err(traffic)?;
    let mut extended_at = None;
    if s.long_stop {
        let stops = profile.intermediate_stops();
        let idx = setup.long_stop.stop_index;
        let Some(stop) = idx.checked_sub(1).and_then(|i| stops.get(i)) else {
            return Err(HarnessError::NoStopToExtend {
                scenario: s.name.clone(),
                index: idx,
                found: stops.len(),
            });
        };
        let extra = (setup.long_stop.extra_s / profile.dt).round() as usize;
        profile.extend_stop(stop, extra);
        extended_at = Some(stop.first);
    }
    let windows = profile
        .intermediate_stops()
        .iter()
        .map(|st| StopWindow {
            start: profile.time_at(st.first),
            end: profile.time_at(st.last + 1),
            extended: Some(st.first) == extended_at,
        })
        .collect();
    Ok((profile, windows))
}

/// Runs one closed-loop experiment at the planner's sampling period.
pub fn run_scenario(s: &Scenario, setup: &Setup) -> Result<RunResult, HarnessError> {
    let name = || s.name.clone();
    let plant_err = |source| HarnessError::Plant {
        scenario: name(),
        source,
    };
    let hvac_err = |source| HarnessError::Hvac {
        scenario: name(),
        source,
    };

    let (target, stops) = planned_profile(s, setup)?;
    let driver = DriverParams {
        seed: s.seed,
        ..setup.driver.clone()
    };
    let actual = apply_driver(&target, &driver);
    let dt = target.dt;
    let n = target.len();
    let ctl = &setup.controller;
    let pt = &setup.powertrain;
    let tp = &setup.thermal;

    let mut state = PlantState::new(s.t_cl0, s.t_cab0, s.soc0);
    state.t = target.origin_time;
    state.v = actual.speeds[0];
    let mut series = TimeSeries::default();
    let mut log = Vec::with_capacity(n);
    let mut cmd = constant_heating();
    let (mut fuel_energy, mut heat, mut idle, mut distance) = (0.0, 0.0, 0.0, 0.0);
    let (mut coolant_net, mut coolant_gross) = (0.0, 0.0);
    let mut degenerate_steps = 0;

    for k in 0..n - 1 {
        let (v, v_next) = (actual.speeds[k], actual.speeds[k + 1]);
        state.v = v;
        if s.heating == Heating::Eco {
            let preview = target.preview(k, ctl.mpc.n_p + 1);
            let sol = mpc_step(state.t_cl, s.t_amb, &preview, ctl, &cmd).map_err(hvac_err)?;
            if sol.status == MpcStatus::DegenerateVent {
                degenerate_steps += 1;
            }
            cmd = sol.command;
        }
        let mdot_bl = ctl.blower.flow(cmd.w_bl).map_err(hvac_err)?;
        let t_ain = vent_air_temp(cmd.t_sp, state.t_cl, &ctl.alpha);
        let p_dahp = dahp(t_ain, s.t_amb, mdot_bl, ctl.c_p);
        let q_heater = p_dahp.max(0.0);

        let p_dem = traction_power(0.5 * (v + v_next), (v_next - v) / dt, &setup.vehicle);
        let step = step_powertrain(&state, p_dem, pt, dt).map_err(plant_err)?;
        let q_engine = engine_heat(step.fuel_power, tp);
        let (next, flux) = step_thermal(&step.state, q_engine, q_heater, s.t_amb, tp, dt);

        series.push(state.t, target.speeds[k], &state, step.state.engine_on, p_dahp, cmd);
        log.push(LogRow {
            t_s: state.t,
            v_mps: v,
            mdot_air_kgps: step.state.last_mdot_air,
            lambda: 1.0,
            soc: state.soc,
            engine_on: u8::from(step.state.engine_on),
            t_ain_c: t_ain,
            t_amb_c: s.t_amb,
            mdot_bl_kgps: mdot_bl,
        });

        fuel_energy += step.fuel_power * dt;
        heat += q_heater * dt;
        if v.max(v_next) < IDLE_SPEED_MPS && step.state.engine_on {
            idle += dt;
        }
        distance += 0.5 * (v + v_next) * dt;
        coolant_net += flux.coolant_net() * dt;
        coolant_gross += (flux.engine.abs() + flux.radiator.abs() + flux.heater.abs()) * dt;
        state = next;
    }

    state.v = actual.speeds[n - 1];
    series.push(state.t, target.speeds[n - 1], &state, state.engine_on, 0.0, cmd);
    log.push(LogRow {
        t_s: state.t,
        v_mps: state.v,
        mdot_air_kgps: 0.0,
        lambda: 1.0,
        soc: state.soc,
        engine_on: 0,
        t_ain_c: vent_air_temp(cmd.t_sp, state.t_cl, &ctl.alpha),
        t_amb_c: s.t_amb,
        mdot_bl_kgps: 0.0,
    });

    let stored = tp.coolant_heat_capacity * (state.t_cl - s.t_cl0);
    let coolant_closure = (stored - coolant_net).abs() / coolant_gross.max(1.0);
    let report = EnergyReport::new(
        fuel_energy,
        s.soc0 - state.soc,
        pt.e_batt,
        pt.eta_sys,
        heat,
        idle,
        distance,
    );
    Ok(RunResult {
        scenario: s.clone(),
        corridor: setup.corridor.clone(),
        series,
        report,
        log,
        coolant_closure,
        stops,
        degenerate_steps,
        dt,
    })
}

/// JSON document for a finished run: the energy report plus the settings
/// needed to interpret it.
pub fn report_json(r: &RunResult, setup: &Setup) -> serde_json::Value {
    serde_json::json!({
        "scenario": r.scenario,
        "report": r.report,
        "metadata": {
            "duration_s": r.series.t.last().copied().unwrap_or(0.0) - r.series.t[0],
            "dt_s": r.dt,
            "E_batt_J": setup.powertrain.e_batt,
            "eta_sys": setup.powertrain.eta_sys,
            "LHV_J_per_kg": setup.powertrain.lhv,
            "beta_scale": setup.controller.beta.scale,
            "coolant_closure": r.coolant_closure,
            "degenerate_steps": r.degenerate_steps,
            "stops": r.stops,
        }
    })
}
