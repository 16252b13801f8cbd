//! Breakpoint tables: the speed-indexed heating multiplier and the blower
//! duty-to-airflow map.

use serde::{Deserialize, Serialize};

use super::HvacError;

pub const MPH: f64 = 0.44704;

/// Piecewise-linear interpolation with constant extrapolation.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|b| *b <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

fn check_axis(name: &str, xs: &[f64], ys: &[f64]) -> Result<(), HvacError> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(HvacError::InvalidTable(format!(
            "{name}: need at least two breakpoints and equal-length columns"
        )));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().chain(ys).any(|x| !x.is_finite()) {
        return Err(HvacError::InvalidTable(format!(
            "{name}: breakpoints must be finite and strictly increasing"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSchedule {
    /// Breakpoint speeds, m/s.
    pub speed_mps: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule {
            speed_mps: [0.0, 10.0, 20.0, 30.0, 40.0].iter().map(|m| m * MPH).collect(),
            beta: vec![0.4, 0.8, 1.1, 1.2, 1.25],
            scale: Self::CALIBRATED_SCALE,
        }
    }
}

impl BetaSchedule {
    /// Scale that equalises mean heating energy on the default calibration set.
    pub const CALIBRATED_SCALE: f64 = 1.255;

    /// Speed above which the scaled multiplier must exceed one, m/s.
    pub const PREHEAT_SPEED: f64 = 8.94;

    pub fn validate(&self) -> Result<(), HvacError> {
        check_axis("beta", &self.speed_mps, &self.beta)?;
        if self.speed_mps[0] != 0.0 {
            return Err(HvacError::InvalidTable("beta: first breakpoint must be at 0 m/s".into()));
        }
        if !(self.scale > 0.0) || self.beta.iter().any(|b| *b <= 0.0) {
            return Err(HvacError::InvalidTable("beta: values and scale must be positive".into()));
        }
        if self.beta[1..].iter().any(|b| *b < self.beta[0]) {
            return Err(HvacError::InvalidTable(
                "beta: the standstill value must be the lowest".into(),
            ));
        }
        Ok(())
    }

    /// Whether the scaled schedule exceeds one everywhere at or above
    /// [`Self::PREHEAT_SPEED`].
    pub fn preheats_at_speed(&self) -> bool {
        let probe = std::iter::once(Self::PREHEAT_SPEED)
            .chain(self.speed_mps.iter().copied().filter(|v| *v >= Self::PREHEAT_SPEED));
        probe.into_iter().all(|v| self.eval(v) > 1.0)
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.scale * interp(&self.speed_mps, &self.beta, v.max(0.0))
    }

    pub fn with_scale(&self, scale: f64) -> Self {
        BetaSchedule {
            scale,
            ..self.clone()
        }
    }
}

pub fn beta(v: f64, sched: &BetaSchedule) -> f64 {
    sched.eval(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowerMap {
    /// Blower duty, percent.
    pub w_bl_pct: Vec<f64>,
    /// Airflow, kg/s.
    pub flow_kgps: Vec<f64>,
}

impl Default for BlowerMap {
    fn default() -> Self {
        BlowerMap {
            w_bl_pct: vec![10.0, 40.0, 70.0],
            flow_kgps: vec![0.02, 0.08, 0.15],
        }
    }
}

impl BlowerMap {
    pub const W_MIN: f64 = 10.0;
    pub const W_MAX: f64 = 70.0;

    pub fn validate(&self) -> Result<(), HvacError> {
        check_axis("blower", &self.w_bl_pct, &self.flow_kgps)?;
        if self.flow_kgps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HvacError::InvalidTable("blower: flow must be strictly increasing".into()));
        }
        if self.w_bl_pct[0] > Self::W_MIN || *self.w_bl_pct.last().unwrap() < Self::W_MAX {
            return Err(HvacError::InvalidTable("blower: map must cover 10..70 %".into()));
        }
        if !(self.eval(Self::W_MIN) > 0.0) {
            return Err(HvacError::InvalidTable("blower: flow at 10 % must be positive".into()));
        }
        Ok(())
    }

    fn eval(&self, w: f64) -> f64 {
        interp(&self.w_bl_pct, &self.flow_kgps, w)
    }

    pub fn flow(&self, w_bl: f64) -> Result<f64, HvacError> {
        if !(Self::W_MIN..=Self::W_MAX).contains(&w_bl) {
            return Err(HvacError::OutOfRange {
                what: "W_bl",
                value: w_bl,
                lo: Self::W_MIN,
                hi: Self::W_MAX,
            });
        }
        Ok(self.eval(w_bl))
    }

    pub fn min_flow(&self) -> f64 {
        self.eval(Self::W_MIN)
    }

    pub fn max_flow(&self) -> f64 {
        self.eval(Self::W_MAX)
    }

    /// Duty that produces `flow`, clamped to the actuator range.
    pub fn duty_for(&self, flow: f64) -> f64 {
        let w = interp(&self.flow_kgps, &self.w_bl_pct, flow);
        w.clamp(Self::W_MIN, Self::W_MAX)
    }
}

pub fn blower_flow(w_bl: f64, map: &BlowerMap) -> Result<f64, HvacError> {
    map.flow(w_bl)
}
