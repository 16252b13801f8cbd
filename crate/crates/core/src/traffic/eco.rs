//! Signal-aware planner. Each intersection is approached with one of four
//! strategies so that the stop bar is crossed inside a green window after
//! the standing queue has discharged.

use serde::Serialize;

use super::kinematics::{self, crossing, fit_stop, ramp, truncate, Segment};
use super::{usable_windows, Corridor, GreenWindow, PlannerLimits, SpeedProfile, TrafficError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Strategy {
    Cruise,
    SpeedUp,
    SlowDown,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegDecision {
    pub intersection_id: u32,
    pub strategy: Strategy,
    pub window: GreenWindow,
    /// Absolute time the stop bar is crossed.
    pub crossing_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcoPlan {
    pub profile: SpeedProfile,
    pub decisions: Vec<LegDecision>,
}

/// Accumulates grid-aligned segments into a sampled profile.
pub(super) struct ProfileBuilder {
    dt: f64,
    origin_time: f64,
    speeds: Vec<f64>,
    pub x: f64,
}

impl ProfileBuilder {
    pub fn new(dt: f64, origin_time: f64, v0: f64) -> Self {
        ProfileBuilder {
            dt,
            origin_time,
            speeds: vec![v0],
            x: 0.0,
        }
    }

    pub fn v(&self) -> f64 {
        *self.speeds.last().expect("builder starts with one sample")
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn t(&self) -> f64 {
        self.origin_time + (self.speeds.len() - 1) as f64 * self.dt
    }

    pub fn push(&mut self, segments: &[Segment]) {
        for seg in segments {
            for j in 1..=seg.steps {
                let va = seg.speed_at(j - 1);
                let vb = seg.speed_at(j);
                self.x += 0.5 * (va + vb) * self.dt;
                self.speeds.push(vb);
            }
        }
    }

    pub fn finish(self) -> SpeedProfile {
        SpeedProfile {
            dt: self.dt,
            speeds: self.speeds,
            origin_time: self.origin_time,
        }
    }
}

pub fn plan_eco_trajectory(
    corridor: &Corridor,
    v0: f64,
    t0: f64,
    limits: &PlannerLimits,
) -> Result<SpeedProfile, TrafficError> {
    plan_eco_detailed(corridor, v0, t0, limits).map(|p| p.profile)
}

pub fn plan_eco_detailed(
    corridor: &Corridor,
    v0: f64,
    t0: f64,
    limits: &PlannerLimits,
) -> Result<EcoPlan, TrafficError> {
    corridor.validate()?;
    limits.validate(corridor, v0)?;
    let mut b = ProfileBuilder::new(limits.dt, t0, v0);
    let mut decisions = Vec::with_capacity(corridor.intersections.len());

    for ix in &corridor.intersections {
        let dist = ix.position_m - b.x;
        let fastest = cruise_plan(b.v(), limits.v_cruise, limits);
        let earliest = b.t()
            + crossing(&fastest, dist, limits.dt)
                .expect("cruise plan keeps moving")
                .time;
        let leg = usable_windows(ix, earliest, limits.horizon_cycles)
            .find_map(|w| plan_leg(&b, dist, w, limits))
            .ok_or(TrafficError::InfeasibleCorridor {
                intersection_id: ix.id,
                earliest_arrival: earliest,
                horizon_cycles: limits.horizon_cycles,
            })?;
        let c = crossing(&leg.segments, dist, limits.dt).expect("leg crosses its stop bar");
        decisions.push(LegDecision {
            intersection_id: ix.id,
            strategy: leg.strategy,
            window: leg.window,
            crossing_time: b.t() + c.time,
        });
        b.push(&truncate(&leg.segments, c.step_after));
    }

    // come to rest at the end of the corridor when there is room for it
    let remaining = corridor.length_m - b.x;
    if let Some(segs) = fit_stop(
        b.v(),
        remaining,
        limits.v_cruise,
        limits.a_max,
        limits.d_max,
        limits.dt,
    ) {
        b.push(&segs);
    }
    Ok(EcoPlan {
        profile: b.finish(),
        decisions,
    })
}

struct Leg {
    segments: Vec<Segment>,
    strategy: Strategy,
    window: GreenWindow,
}

fn cruise_plan(v: f64, v_target: f64, limits: &PlannerLimits) -> Vec<Segment> {
    let mut segs: Vec<Segment> = ramp(v, v_target, limits.a_max, limits.d_max, limits.dt)
        .into_iter()
        .collect();
    segs.push(Segment::hold(v_target, 1));
    segs
}

fn arrival(v: f64, v_target: f64, dist: f64, limits: &PlannerLimits) -> f64 {
    crossing(&cruise_plan(v, v_target, limits), dist, limits.dt)
        .map(|c| c.time)
        .unwrap_or(f64::INFINITY)
}

/// Tries to cross a stop bar `dist` ahead inside `window`, in order:
/// cruise / speed up, slow down, stop.
fn plan_leg(b: &ProfileBuilder, dist: f64, window: GreenWindow, limits: &PlannerLimits) -> Option<Leg> {
    let t = b.t();
    let v = b.v();
    let lo = window.open_time + limits.window_margin_s - t;
    let hi = window.close_time - limits.window_margin_s - t;
    if hi <= 0.0 {
        return None;
    }
    let leg = |segments, strategy| Leg {
        segments,
        strategy,
        window,
    };

    let fast = arrival(v, limits.v_cruise, dist, limits);
    if fast > hi {
        return None;
    }
    if fast >= lo {
        let strategy = if limits.v_cruise - v > 1e-9 {
            Strategy::SpeedUp
        } else {
            Strategy::Cruise
        };
        return Some(leg(cruise_plan(v, limits.v_cruise, limits), strategy));
    }

    if limits.v_min_glide < limits.v_cruise && arrival(v, limits.v_min_glide, dist, limits) >= lo {
        // latest-arriving speed is monotone up to grid rounding; keep the
        // bracket end that satisfies the lower bound
        let (mut slow, mut quick) = (limits.v_min_glide, limits.v_cruise);
        for _ in 0..60 {
            let mid = 0.5 * (slow + quick);
            if arrival(v, mid, dist, limits) >= lo {
                slow = mid;
            } else {
                quick = mid;
            }
        }
        if arrival(v, slow, dist, limits) <= hi {
            let strategy = if slow < v - 1e-9 {
                Strategy::SlowDown
            } else {
                Strategy::SpeedUp
            };
            return Some(leg(cruise_plan(v, slow, limits), strategy));
        }
    }

    let mut segs = fit_stop(
        v,
        dist - limits.stop_setback_m,
        limits.v_cruise,
        limits.a_max,
        limits.d_max,
        limits.dt,
    )?;
    let stop_steps = kinematics::total_steps(&segs);
    let depart_step = ((window.open_time - t) / limits.dt - 1e-9).ceil().max(0.0) as u32;
    if depart_step > stop_steps {
        segs.push(Segment::hold(0.0, depart_step - stop_steps));
    }
    segs.extend(cruise_plan(0.0, limits.v_cruise, limits));
    let c = crossing(&segs, dist, limits.dt)?;
    let cross_abs = t + c.time;
    if cross_abs < window.open_time || c.time > hi {
        return None;
    }
    Some(leg(segs, Strategy::Stop))
}
