//! No-preview driver: accelerates to the cruise speed, reacts to a red
//! signal or a standing queue only once inside its stopping distance, and
//! leaves when the queue ahead has cleared on green.

use super::eco::ProfileBuilder;
use super::kinematics::{fit_stop, Segment};
use super::{queue_length, signal_state, Corridor, Intersection, PlannerLimits, SignalState};
use super::{SpeedProfile, TrafficError};

/// Waiting longer than this many horizons at one signal means it never opens.
const MAX_WAIT_FACTOR: f64 = 2.0;
const MAX_STEPS: usize = 1_000_000;

fn blocked(ix: &Intersection, t: f64) -> bool {
    signal_state(ix, t) == SignalState::Red || queue_length(ix, t) > 0.0
}

/// Where the driver stops for `ix` at time `t`: behind the standing queue.
fn stop_target(ix: &Intersection, t: f64, limits: &PlannerLimits) -> f64 {
    ix.position_m - limits.stop_setback_m - queue_length(ix, t) * ix.discharge_headway_length
}

/// Minimum distance to stop from `v` on the sampling grid.
fn stopping_distance(v: f64, limits: &PlannerLimits) -> f64 {
    let n = (v / (limits.d_max * limits.dt) - 1e-9).ceil().max(0.0);
    0.5 * v * n * limits.dt
}

pub fn plan_normal_trajectory(
    corridor: &Corridor,
    v0: f64,
    t0: f64,
    limits: &PlannerLimits,
) -> Result<SpeedProfile, TrafficError> {
    corridor.validate()?;
    limits.validate(corridor, v0)?;
    let dt = limits.dt;
    let mut b = ProfileBuilder::new(dt, t0, v0);
    // committed braking plan and the stop position it was fitted for
    let mut braking: Option<(Vec<Segment>, f64)> = None;
    // signal the vehicle is standing at, and since when
    let mut standing: Option<(u32, f64)> = None;

    loop {
        let (x, v, t) = (b.x, b.v(), b.t());
        let ahead = corridor.intersections.iter().find(|ix| ix.position_m > x);
        if b.len() > MAX_STEPS {
            return Err(TrafficError::InfeasibleCorridor {
                intersection_id: ahead.map_or(0, |ix| ix.id),
                earliest_arrival: t,
                horizon_cycles: limits.horizon_cycles,
            });
        }

        if let (Some((id, since)), Some(ix)) = (standing, ahead) {
            if id == ix.id && blocked(ix, t) {
                if t - since > MAX_WAIT_FACTOR * ix.cycle_s * limits.horizon_cycles as f64 {
                    return Err(TrafficError::InfeasibleCorridor {
                        intersection_id: ix.id,
                        earliest_arrival: since,
                        horizon_cycles: limits.horizon_cycles,
                    });
                }
                b.push(&[Segment::hold(0.0, 1)]);
                continue;
            }
        }
        standing = None;

        let obstacle = match ahead {
            Some(ix) if blocked(ix, t) => Some((stop_target(ix, t, limits), Some(ix))),
            Some(_) => None,
            None => Some((corridor.length_m, None)),
        };
        let Some((target, ix)) = obstacle else {
            braking = None;
            b.push(&[accelerate(v, limits)]);
            continue;
        };
        let rem = target - x;

        if let Some((plan, fitted_for)) = braking.as_mut() {
            if (*fitted_for - target).abs() <= 0.5 {
                if plan.is_empty() {
                    braking = None;
                    match ix {
                        Some(ix) => {
                            standing = Some((ix.id, t));
                            continue;
                        }
                        None => break,
                    }
                }
                let step = take_step(plan);
                b.push(&[step]);
                continue;
            }
        }

        let next = accelerate(v, limits);
        let rem_after = rem - next.distance(dt);
        if rem_after >= stopping_distance(next.v_end, limits) {
            braking = None;
            b.push(&[next]);
            continue;
        }
        match fit_stop(v, rem, v.max(limits.a_max * dt), limits.a_max, limits.d_max, dt) {
            Some(plan) => {
                braking = Some((plan, target));
            }
            None => {
                if ix.is_none() {
                    // no room left to stop before the end: finish here
                    break;
                }
                // too close to stop: carry on through
                braking = None;
                b.push(&[next]);
            }
        }
    }
    Ok(b.finish())
}

fn accelerate(v: f64, limits: &PlannerLimits) -> Segment {
    let v_next = (v + limits.a_max * limits.dt).min(limits.v_cruise).max(v.min(limits.v_cruise));
    Segment {
        v_start: v,
        v_end: v_next,
        steps: 1,
    }
}

/// Pops the first grid step off a plan.
fn take_step(plan: &mut Vec<Segment>) -> Segment {
    let first = plan[0];
    let step = Segment {
        v_start: first.v_start,
        v_end: first.speed_at(1),
        steps: 1,
    };
    if first.steps == 1 {
        plan.remove(0);
    } else {
        plan[0] = Segment {
            v_start: step.v_end,
            v_end: first.v_end,
            steps: first.steps - 1,
        };
    }
    step
}
