use std::io::Write;

use serde::{Deserialize, Serialize};

use super::TrafficError;

/// Below this speed a sample counts as standing still.
const STANDSTILL_MPS: f64 = 1e-9;

/// Uniformly sampled speed trace. Between samples the speed is linear, so
/// positions integrate exactly with the trapezoid rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    pub dt: f64,
    pub speeds: Vec<f64>,
    pub origin_time: f64,
}

/// A maximal run of zero-speed samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopInterval {
    pub first: usize,
    pub last: usize,
    pub position_m: f64,
}

impl StopInterval {
    pub fn samples(&self) -> usize {
        self.last - self.first + 1
    }
}

impl SpeedProfile {
    pub fn new(dt: f64, speeds: Vec<f64>, origin_time: f64) -> Result<Self, TrafficError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(TrafficError::InvalidProfile("dt must be positive".into()));
        }
        if let Some(v) = speeds.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(TrafficError::InvalidProfile(format!(
                "speed sample {v} is negative or not finite"
            )));
        }
        Ok(SpeedProfile {
            dt,
            speeds,
            origin_time,
        })
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.origin_time + k as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.speeds.len().saturating_sub(1) as f64
    }

    /// Cumulative distance at each sample.
    pub fn positions(&self) -> Vec<f64> {
        let mut x = 0.0;
        let mut out = Vec::with_capacity(self.speeds.len());
        for (k, v) in self.speeds.iter().enumerate() {
            if k > 0 {
                x += 0.5 * (self.speeds[k - 1] + v) * self.dt;
            }
            out.push(x);
        }
        out
    }

    pub fn distance(&self) -> f64 {
        self.positions().last().copied().unwrap_or(0.0)
    }

    /// First time the vehicle is strictly past `position`.
    pub fn crossing_time(&self, position: f64) -> Option<f64> {
        let xs = self.positions();
        for k in 1..xs.len() {
            if xs[k] > position {
                let v0 = self.speeds[k - 1];
                let accel = (self.speeds[k] - v0) / self.dt;
                let tau = solve_travel(v0, accel, position - xs[k - 1]).min(self.dt);
                return Some(self.time_at(k - 1) + tau);
            }
        }
        None
    }

    /// Maximal zero-speed runs, including a leading or trailing standstill.
    pub fn stop_intervals(&self) -> Vec<StopInterval> {
        let xs = self.positions();
        let mut out = Vec::new();
        let mut k = 0;
        while k < self.speeds.len() {
            if self.speeds[k] <= STANDSTILL_MPS {
                let first = k;
                while k + 1 < self.speeds.len() && self.speeds[k + 1] <= STANDSTILL_MPS {
                    k += 1;
                }
                out.push(StopInterval {
                    first,
                    last: k,
                    position_m: xs[first],
                });
            }
            k += 1;
        }
        out
    }

    /// Stops after the vehicle has started moving and before the final
    /// sample: the stops made at signals.
    pub fn intermediate_stops(&self) -> Vec<StopInterval> {
        let n = self.speeds.len();
        self.stop_intervals()
            .into_iter()
            .filter(|s| s.first > 0 && s.last + 1 < n)
            .collect()
    }

    /// Largest finite-difference acceleration magnitude split by sign:
    /// (max accel, max decel), both reported as positive numbers.
    pub fn accel_extremes(&self) -> (f64, f64) {
        self.speeds
            .windows(2)
            .map(|w| (w[1] - w[0]) / self.dt)
            .fold((0.0f64, 0.0f64), |(a, d), x| (a.max(x), d.max(-x)))
    }

    /// Samples `start..start+len`, repeating the final sample past the end.
    pub fn preview(&self, start: usize, len: usize) -> Vec<f64> {
        let last = self.speeds.last().copied().unwrap_or(0.0);
        (start..start + len)
            .map(|k| self.speeds.get(k).copied().unwrap_or(last))
            .collect()
    }

    /// Inserts `extra_samples` of standstill into the given stop.
    pub fn extend_stop(&mut self, stop: &StopInterval, extra_samples: usize) {
        let at = stop.last;
        self.speeds
            .splice(at..at, std::iter::repeat_n(0.0, extra_samples));
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_s,v_mps")?;
        for (k, v) in self.speeds.iter().enumerate() {
            writeln!(out, "{},{}", self.time_at(k), v)?;
        }
        Ok(())
    }
}

/// Time to travel `dist` from speed `v0` under constant `accel`.
pub(crate) fn solve_travel(v0: f64, accel: f64, dist: f64) -> f64 {
    if dist <= 0.0 {
        return 0.0;
    }
    if accel.abs() < 1e-12 {
        return dist / v0;
    }
    let disc = (v0 * v0 + 2.0 * accel * dist).max(0.0);
    // numerically stable root of accel/2 t^2 + v0 t - dist = 0
    2.0 * dist / (v0 + disc.sqrt())
}
