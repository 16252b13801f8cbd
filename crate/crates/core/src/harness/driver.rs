use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::traffic::SpeedProfile;

/// Human tracking of a speed command: a first-order lag plus colored noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriverParams {
    /// s
    pub lag_time_constant: f64,
    /// Stationary standard deviation of the speed noise, m/s.
    pub noise_std: f64,
    /// Step-to-step correlation of the AR(1) noise.
    pub noise_corr: f64,
    pub seed: u64,
}

impl Default for DriverParams {
    fn default() -> Self {
        DriverParams {
            lag_time_constant: 1.0,
            noise_std: 1.0,
            noise_corr: 0.9,
            seed: 0,
        }
    }
}

impl DriverParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lag_time_constant > 0.0) {
            return Err("lag_time_constant must be positive".into());
        }
        if !(self.noise_std >= 0.0) {
            return Err("noise_std must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.noise_corr) {
            return Err("noise_corr must lie in [0, 1)".into());
        }
        Ok(())
    }
}

/// Speed the driver actually achieves when asked to follow `target`. The
/// noise is silenced while the command is a standstill so stops stay stops.
pub fn apply_driver(target: &SpeedProfile, p: &DriverParams) -> SpeedProfile {
    let gain = 1.0 - (-target.dt / p.lag_time_constant).exp();
    let innovation = p.noise_std * (1.0 - p.noise_corr * p.noise_corr).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut lagged = target.speeds.first().copied().unwrap_or(0.0);
    let mut noise = 0.0;
    let mut out = Vec::with_capacity(target.len());
    for (k, &cmd) in target.speeds.iter().enumerate() {
        if k > 0 {
            lagged += gain * (cmd - lagged);
            let e: f64 = StandardNormal.sample(&mut rng);
            noise = p.noise_corr * noise + innovation * e;
        }
        let v = if cmd > 0.0 { lagged + noise } else { lagged };
        out.push(v.max(0.0));
    }
    SpeedProfile {
        dt: target.dt,
        speeds: out,
        origin_time: target.origin_time,
    }
}

/// Mean absolute and standard deviation of the tracking error, m/s.
pub fn tracking_stats(target: &SpeedProfile, actual: &SpeedProfile) -> (f64, f64) {
    let err: Vec<f64> = actual
        .speeds
        .iter()
        .zip(&target.speeds)
        .map(|(a, t)| a - t)
        .collect();
    let n = err.len() as f64;
    let mae = err.iter().map(|e| e.abs()).sum::<f64>() / n;
    let mean = err.iter().sum::<f64>() / n;
    let var = err.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    (mae, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: f64, n: usize) -> SpeedProfile {
        SpeedProfile::new(1.0, vec![v; n], 0.0).unwrap()
    }

    #[test]
    fn noiseless_lag_converges() {
        let mut speeds = vec![0.0];
        speeds.extend(std::iter::repeat_n(10.0, 60));
        let target = SpeedProfile::new(1.0, speeds, 0.0).unwrap();
        let p = DriverParams {
            noise_std: 0.0,
            ..DriverParams::default()
        };
        let out = apply_driver(&target, &p);
        assert!(out.speeds[1] < 10.0);
        assert!((out.speeds.last().unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn seeded_and_nonnegative() {
        let target = flat(1.0, 500);
        let p = DriverParams {
            noise_std: 2.0,
            seed: 9,
            ..DriverParams::default()
        };
        let a = apply_driver(&target, &p);
        assert_eq!(a, apply_driver(&target, &p));
        assert!(a.speeds.iter().all(|v| *v >= 0.0));
        let other = apply_driver(&target, &DriverParams { seed: 10, ..p });
        assert_ne!(a, other);
    }

    #[test]
    fn standstill_is_quiet() {
        let out = apply_driver(&flat(0.0, 100), &DriverParams::default());
        assert!(out.speeds.iter().all(|v| *v == 0.0));
    }
}
