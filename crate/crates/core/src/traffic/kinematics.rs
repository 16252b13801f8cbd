//! Constant-acceleration segments whose boundaries fall on the sampling
//! grid. Sampled at `dt`, a plan built from these reproduces its own
//! positions exactly under trapezoid integration.

use super::profile::solve_travel;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Segment {
    pub v_start: f64,
    pub v_end: f64,
    pub steps: u32,
}

impl Segment {
    pub fn hold(v: f64, steps: u32) -> Self {
        Segment {
            v_start: v,
            v_end: v,
            steps,
        }
    }

    /// Speed at sample `j` of the segment, `0 <= j <= steps`.
    pub fn speed_at(&self, j: u32) -> f64 {
        if j == 0 {
            self.v_start
        } else if j == self.steps {
            self.v_end
        } else {
            self.v_start + (self.v_end - self.v_start) * (j as f64 / self.steps as f64)
        }
    }

    pub fn distance(&self, dt: f64) -> f64 {
        0.5 * (self.v_start + self.v_end) * self.steps as f64 * dt
    }
}

/// Fewest whole steps that change speed from `from` to `to` within limits.
pub(crate) fn ramp_steps(from: f64, to: f64, a_max: f64, d_max: f64, dt: f64) -> u32 {
    let dv = to - from;
    let limit = if dv >= 0.0 { a_max } else { d_max };
    let n = (dv.abs() / (limit * dt) - 1e-9).ceil();
    n.max(0.0) as u32
}

/// Ramp from `from` to `to` at the limit rate (possibly empty).
pub(crate) fn ramp(from: f64, to: f64, a_max: f64, d_max: f64, dt: f64) -> Option<Segment> {
    let steps = ramp_steps(from, to, a_max, d_max, dt);
    (steps > 0).then_some(Segment {
        v_start: from,
        v_end: to,
        steps,
    })
}

fn within(dv: f64, steps: u32, a_max: f64, d_max: f64, dt: f64) -> bool {
    let limit = if dv >= 0.0 { a_max } else { d_max };
    dv.abs() <= limit * dt * steps as f64 + EPS
}

/// Minimum-duration plan that covers exactly `dist` and ends at rest:
/// ramp to a hold speed (at most `v_max`), hold, brake. `None` when the
/// distance is too short to stop.
pub(crate) fn fit_stop(
    v0: f64,
    dist: f64,
    v_max: f64,
    a_max: f64,
    d_max: f64,
    dt: f64,
) -> Option<Vec<Segment>> {
    if v0 <= EPS && dist.abs() <= 1e-9 {
        return Some(Vec::new());
    }
    if dist <= 0.0 {
        return None;
    }
    let v_top = v_max.max(v0);
    let n1_cap = (v_top / (a_max.min(d_max) * dt)).ceil() as u32 + 3;
    let n3_cap = (v_top / (d_max * dt)).ceil() as u32 + 3;
    let d = dist / dt;
    let mut best: Option<(u32, [Segment; 3])> = None;

    for n1 in 0..=n1_cap {
        for n3 in 1..=n3_cap {
            let base = 0.5 * n1 as f64 + 0.5 * n3 as f64;
            let free = d - 0.5 * v0 * n1 as f64;
            if free <= 0.0 {
                continue;
            }
            let n2_lo = ((free / v_max - base) - 1e-9).ceil().max(0.0) as u32;
            for n2 in n2_lo..n2_lo + 4 {
                let total = n1 + n2 + n3;
                if best.as_ref().is_some_and(|(t, _)| *t <= total) {
                    break;
                }
                let v_hold = if n1 == 0 {
                    // no ramp: hold speed is pinned to v0
                    if ((v0 * (n2 as f64 + 0.5 * n3 as f64)) - d).abs() > 1e-9 {
                        continue;
                    }
                    v0
                } else {
                    free / (base + n2 as f64)
                };
                if !(v_hold > 0.0 && v_hold <= v_max.max(v0) + EPS) {
                    continue;
                }
                if n1 > 0 && !within(v_hold - v0, n1, a_max, d_max, dt) {
                    continue;
                }
                if !within(-v_hold, n3, a_max, d_max, dt) {
                    continue;
                }
                best = Some((
                    total,
                    [
                        Segment {
                            v_start: v0,
                            v_end: v_hold,
                            steps: n1,
                        },
                        Segment::hold(v_hold, n2),
                        Segment {
                            v_start: v_hold,
                            v_end: 0.0,
                            steps: n3,
                        },
                    ],
                ));
            }
        }
    }
    best.map(|(_, segs)| segs.into_iter().filter(|s| s.steps > 0).collect())
}

/// Where a plan of segments (followed by holding its final speed forever)
/// first gets strictly past `target` measured from the plan start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Crossing {
    /// Seconds after the plan start.
    pub time: f64,
    /// Index of the first grid sample at or after the crossing.
    pub step_after: u32,
}

pub(crate) fn crossing(segments: &[Segment], target: f64, dt: f64) -> Option<Crossing> {
    let mut x = 0.0;
    let mut step = 0u32;
    let mut last_v = 0.0;
    for seg in segments {
        for j in 0..seg.steps {
            let va = seg.speed_at(j);
            let vb = seg.speed_at(j + 1);
            let dx = 0.5 * (va + vb) * dt;
            if x + dx > target {
                let tau = solve_travel(va, (vb - va) / dt, target - x).min(dt);
                return Some(Crossing {
                    time: step as f64 * dt + tau,
                    step_after: step + 1,
                });
            }
            x += dx;
            step += 1;
        }
        last_v = seg.v_end;
    }
    if last_v <= EPS {
        return None;
    }
    let remaining = (target - x).max(0.0);
    let extra_steps = (remaining / (last_v * dt)).floor() as u32;
    let rest = remaining - extra_steps as f64 * last_v * dt;
    Some(Crossing {
        time: (step + extra_steps) as f64 * dt + rest / last_v,
        step_after: step + extra_steps + 1,
    })
}

/// The first `steps` samples' worth of a plan, extending the final speed if
/// the segments run out.
pub(crate) fn truncate(segments: &[Segment], steps: u32) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut left = steps;
    let mut last_v = 0.0;
    for seg in segments {
        if left == 0 {
            return out;
        }
        if seg.steps <= left {
            out.push(*seg);
            left -= seg.steps;
        } else {
            out.push(Segment {
                v_start: seg.v_start,
                v_end: seg.speed_at(left),
                steps: left,
            });
            return out;
        }
        last_v = seg.v_end;
    }
    if left > 0 {
        out.push(Segment::hold(last_v, left));
    }
    out
}

pub(crate) fn total_steps(segments: &[Segment]) -> u32 {
    segments.iter().map(|s| s.steps).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(segs: &[Segment]) -> Vec<f64> {
        let mut v = vec![segs[0].v_start];
        for s in segs {
            for j in 1..=s.steps {
                v.push(s.speed_at(j));
            }
        }
        v
    }

    fn trapezoid(v: &[f64]) -> f64 {
        v.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum()
    }

    #[test]
    fn fit_stop_is_exact_and_within_limits() {
        for &(v0, dist) in &[
            (17.9, 500.0),
            (0.0, 300.0),
            (10.0, 25.0),
            (17.9, 70.0),
            (4.0, 3.5),
            (0.0, 0.4),
        ] {
            let segs = fit_stop(v0, dist, 17.9, 1.5, 2.5, 1.0).expect("feasible");
            let v = sample(&segs);
            assert!((trapezoid(&v) - dist).abs() < 1e-9, "v0={v0} dist={dist}");
            assert_eq!(*v.last().unwrap(), 0.0);
            for w in v.windows(2) {
                let a = w[1] - w[0];
                assert!((-2.5 - 1e-9..=1.5 + 1e-9).contains(&a));
            }
            assert!(v.iter().all(|x| *x <= 17.9 + 1e-9));
        }
    }

    #[test]
    fn fit_stop_rejects_short_distance() {
        // needs at least 17.9 * 8 / 2 = 71.6 m at 2.5 m/s^2 on a 1 s grid
        assert!(fit_stop(17.9, 40.0, 17.9, 1.5, 2.5, 1.0).is_none());
        assert_eq!(fit_stop(0.0, 0.0, 17.9, 1.5, 2.5, 1.0), Some(vec![]));
    }

    #[test]
    fn crossing_extends_final_hold() {
        let segs = [Segment {
            v_start: 0.0,
            v_end: 2.0,
            steps: 2,
        }];
        // 2 m during the ramp then 2 m/s
        let c = crossing(&segs, 6.0, 1.0).unwrap();
        assert!((c.time - 4.0).abs() < 1e-12);
        assert_eq!(c.step_after, 5);
        let c = crossing(&segs, 0.25, 1.0).unwrap();
        assert!((c.time - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(c.step_after, 1);
    }

    #[test]
    fn truncate_splits_on_grid() {
        let segs = [Segment {
            v_start: 0.0,
            v_end: 3.0,
            steps: 3,
        }];
        let t = truncate(&segs, 2);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].v_end, 2.0);
        let t = truncate(&segs, 5);
        assert_eq!(total_steps(&t), 5);
        assert_eq!(t[1], Segment::hold(3.0, 2));
    }
}
