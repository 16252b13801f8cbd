//! Fixed-time signalized corridor: signal phases, a deterministic queue
//! model, green windows, and the two speed planners (signal-aware and
//! no-preview human-like).

mod eco;
mod kinematics;
mod normal;
mod profile;
mod signal;

pub use eco::{plan_eco_detailed, plan_eco_trajectory, EcoPlan, LegDecision, Strategy};
pub use normal::plan_normal_trajectory;
pub use profile::{SpeedProfile, StopInterval};
pub use signal::{green_window, queue_length, signal_state, usable_windows};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 40 mph.
pub const DEFAULT_CRUISE_MPS: f64 = 17.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrafficError {
    #[error("intersection {id}: {reason}")]
    InvalidIntersection { id: u32, reason: String },
    #[error("corridor: {0}")]
    InvalidCorridor(String),
    #[error("planner limits: {0}")]
    InvalidLimits(String),
    #[error(
        "no reachable green window at intersection {intersection_id} \
         (earliest arrival {earliest_arrival:.1} s, horizon {horizon_cycles} cycles)"
    )]
    InfeasibleCorridor {
        intersection_id: u32,
        earliest_arrival: f64,
        horizon_cycles: u32,
    },
    #[error("speed profile: {0}")]
    InvalidProfile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalState {
    Green,
    Red,
}

/// A fixed-time signal with a stop bar at `position_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intersection {
    pub id: u32,
    /// Stop bar, meters from the corridor entrance.
    pub position_m: f64,
    pub cycle_s: f64,
    /// Start of green within the cycle.
    pub green_offset_s: f64,
    pub green_duration_s: f64,
    /// Vehicles standing at the start of every red.
    #[serde(default)]
    pub initial_queue: f64,
    /// Saturation flow during green, vehicles per second.
    pub discharge_rate: f64,
    /// Spatial footprint of one queued vehicle, meters.
    #[serde(default = "default_headway")]
    pub discharge_headway_length: f64,
    /// Arrivals joining the queue during red, vehicles per second.
    #[serde(default)]
    pub arrival_rate: f64,
}

fn default_headway() -> f64 {
    7.5
}

impl Intersection {
    /// Checks the per-signal invariants. A zero-length green is accepted
    /// here; it makes the signal unpassable and surfaces as
    /// [`TrafficError::InfeasibleCorridor`] at planning time.
    pub fn validate(&self) -> Result<(), TrafficError> {
        let bad = |reason: &str| {
            Err(TrafficError::InvalidIntersection {
                id: self.id,
                reason: reason.to_string(),
            })
        };
        let finite = [
            self.position_m,
            self.cycle_s,
            self.green_offset_s,
            self.green_duration_s,
            self.initial_queue,
            self.discharge_rate,
            self.discharge_headway_length,
            self.arrival_rate,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return bad("all fields must be finite");
        }
        if self.cycle_s <= 0.0 {
            return bad("cycle_s must be positive");
        }
        if !(0.0..self.cycle_s).contains(&self.green_offset_s) {
            return bad("green_offset_s must lie in [0, cycle_s)");
        }
        if !(0.0..self.cycle_s).contains(&self.green_duration_s) {
            return bad("green_duration_s must lie in [0, cycle_s)");
        }
        if self.initial_queue < 0.0 {
            return bad("initial_queue must be >= 0");
        }
        if self.discharge_rate <= 0.0 {
            return bad("discharge_rate must be positive");
        }
        if self.discharge_headway_length < 0.0 {
            return bad("discharge_headway_length must be >= 0");
        }
        if self.arrival_rate < 0.0 {
            return bad("arrival_rate must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corridor {
    pub length_m: f64,
    pub speed_limit_mps: f64,
    pub intersections: Vec<Intersection>,
}

impl Corridor {
    pub fn validate(&self) -> Result<(), TrafficError> {
        if !(self.length_m.is_finite() && self.length_m > 0.0) {
            return Err(TrafficError::InvalidCorridor("length_m must be positive".into()));
        }
        if !(self.speed_limit_mps.is_finite() && self.speed_limit_mps > 0.0) {
            return Err(TrafficError::InvalidCorridor(
                "speed_limit_mps must be positive".into(),
            ));
        }
        let mut prev = 0.0;
        for ix in &self.intersections {
            ix.validate()?;
            if ix.position_m <= prev || ix.position_m > self.length_m {
                return Err(TrafficError::InvalidIntersection {
                    id: ix.id,
                    reason: format!(
                        "position_m {} must be strictly increasing and inside (0, {}]",
                        ix.position_m, self.length_m
                    ),
                });
            }
            prev = ix.position_m;
        }
        Ok(())
    }

    /// Smallest gap between consecutive stop bars (or from the entrance to
    /// the first one).
    pub fn min_spacing(&self) -> f64 {
        let mut prev = 0.0;
        let mut min = f64::INFINITY;
        for ix in &self.intersections {
            min = min.min(ix.position_m - prev);
            prev = ix.position_m;
        }
        min
    }

    /// A representative 2.2 mile arterial with six fixed-time signals.
    pub fn default_arterial() -> Self {
        let mk = |id, position_m, cycle_s, green_offset_s, green_duration_s, initial_queue| {
            Intersection {
                id,
                position_m,
                cycle_s,
                green_offset_s,
                green_duration_s,
                initial_queue,
                discharge_rate: 0.5,
                discharge_headway_length: 7.5,
                arrival_rate: 0.0,
            }
        };
        Corridor {
            length_m: 3540.0,
            speed_limit_mps: DEFAULT_CRUISE_MPS,
            intersections: vec![
                mk(1, 400.0, 100.0, 86.0, 41.0, 3.0),
                mk(2, 950.0, 110.0, 11.0, 41.0, 4.0),
                mk(3, 1230.0, 110.0, 83.0, 30.0, 6.0),
                mk(4, 1900.0, 120.0, 12.0, 46.0, 4.0),
                mk(5, 2170.0, 110.0, 103.0, 32.0, 3.0),
                mk(6, 2980.0, 120.0, 42.0, 33.0, 1.0),
            ],
        }
    }
}

/// Kinematic limits and tuning shared by both planners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerLimits {
    pub a_max: f64,
    pub d_max: f64,
    pub v_cruise: f64,
    pub v_min_glide: f64,
    /// Sampling period of emitted profiles.
    pub dt: f64,
    /// Crossings are targeted this far inside a green window.
    pub window_margin_s: f64,
    /// Distance between the stop position and the stop bar.
    pub stop_setback_m: f64,
    /// Number of signal cycles searched for a reachable window.
    pub horizon_cycles: u32,
}

impl Default for PlannerLimits {
    fn default() -> Self {
        PlannerLimits {
            a_max: 1.5,
            d_max: 2.5,
            v_cruise: DEFAULT_CRUISE_MPS,
            v_min_glide: 4.5,
            dt: 1.0,
            window_margin_s: 1.0,
            stop_setback_m: 0.5,
            horizon_cycles: 10,
        }
    }
}

impl PlannerLimits {
    pub fn validate(&self, corridor: &Corridor, v0: f64) -> Result<(), TrafficError> {
        let bad = |m: String| Err(TrafficError::InvalidLimits(m));
        if !(self.a_max > 0.0 && self.d_max > 0.0) {
            return bad("a_max and d_max must be positive".into());
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive".into());
        }
        if !(0.0..=self.v_cruise).contains(&v0) {
            return bad(format!("v0 {v0} must lie in [0, v_cruise]"));
        }
        if self.v_cruise > corridor.speed_limit_mps + 1e-9 {
            return bad(format!(
                "v_cruise {} exceeds the speed limit {}",
                self.v_cruise, corridor.speed_limit_mps
            ));
        }
        if !(self.v_min_glide > 0.0 && self.v_min_glide <= self.v_cruise) {
            return bad("v_min_glide must lie in (0, v_cruise]".into());
        }
        if self.window_margin_s < 0.0 || self.stop_setback_m < 0.0 {
            return bad("window_margin_s and stop_setback_m must be >= 0".into());
        }
        if self.horizon_cycles == 0 {
            return bad("horizon_cycles must be >= 1".into());
        }
        if corridor.min_spacing() <= corridor.speed_limit_mps * self.dt {
            return bad(format!(
                "stop bars closer than one sample of travel ({:.1} m)",
                corridor.speed_limit_mps * self.dt
            ));
        }
        Ok(())
    }
}

/// An interval during which the ego vehicle can pass: green and the
/// standing queue already discharged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenWindow {
    pub intersection_id: u32,
    pub open_time: f64,
    pub close_time: f64,
}

impl GreenWindow {
    pub fn is_empty(&self) -> bool {
        self.close_time <= self.open_time
    }

    pub fn len(&self) -> f64 {
        (self.close_time - self.open_time).max(0.0)
    }
}
