//! Energy accounting: heating energy, fuel energy from air flow, and the
//! battery-corrected equivalent energy.

mod replay;

pub use replay::{read_log, replay_log, replay_rows, write_log, LogRow, REPLAY_HEADER};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An interval counts as stopped when the speed at both ends is below this.
pub const IDLE_SPEED_MPS: f64 = 0.5;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("log is missing column(s): {}", .missing.join(", "))]
    SchemaError { missing: Vec<String> },
    #[error("timestamps must increase: row {row} has t = {t} after {prev}")]
    MonotonicityError { row: usize, prev: f64, t: f64 },
    #[error("lambda must be positive: row {row} has {lambda}")]
    InvalidLambda { row: usize, lambda: f64 },
    #[error("log has {0} row(s); need at least 2")]
    TooShort(usize),
    #[error("bad log record: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// J
    pub fuel_energy: f64,
    /// SOC(0) − SOC(t_f)
    pub delta_soc: f64,
    /// J
    pub soc_correction: f64,
    /// J
    #[serde(rename = "E_eq")]
    pub e_eq: f64,
    /// J
    #[serde(rename = "E_DAHE")]
    pub e_dahe: f64,
    pub engine_idle_seconds: f64,
    /// m
    pub distance: f64,
}

impl EnergyReport {
    pub fn new(
        fuel_energy: f64,
        delta_soc: f64,
        e_batt: f64,
        eta_sys: f64,
        e_dahe: f64,
        engine_idle_seconds: f64,
        distance: f64,
    ) -> Self {
        let soc_correction = soc_correction(delta_soc, e_batt, eta_sys);
        EnergyReport {
            fuel_energy,
            delta_soc,
            soc_correction,
            e_eq: fuel_energy + soc_correction,
            e_dahe,
            engine_idle_seconds,
            distance,
        }
    }

    /// Largest relative difference over the energy fields and idle time.
    pub fn max_rel_diff(&self, other: &EnergyReport) -> f64 {
        let rel = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        };
        [
            rel(self.fuel_energy, other.fuel_energy),
            rel(self.soc_correction, other.soc_correction),
            rel(self.e_eq, other.e_eq),
            rel(self.e_dahe, other.e_dahe),
            rel(self.engine_idle_seconds, other.engine_idle_seconds),
            rel(self.distance, other.distance),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Heating energy: nonnegative part of the power series, rectangle rule.
pub fn dahe(p_dahp: &[f64], dt: f64) -> f64 {
    p_dahp.iter().map(|p| p.max(0.0) * dt).sum()
}

fn soc_correction(delta_soc: f64, e_batt: f64, eta_sys: f64) -> f64 {
    e_batt * delta_soc / eta_sys
}

pub fn equivalent_energy(fuel_energy: f64, delta_soc: f64, e_batt: f64, eta_sys: f64) -> f64 {
    fuel_energy + soc_correction(delta_soc, e_batt, eta_sys)
}

pub fn fuel_energy_from_maf(
    mdot_air: &[f64],
    lambda: &[f64],
    afr_stoich: f64,
    lhv: f64,
    dt: f64,
) -> Result<f64, EnergyError> {
    let mut total = 0.0;
    for (row, (m, l)) in mdot_air.iter().zip(lambda).enumerate() {
        if !(*l > 0.0) {
            return Err(EnergyError::InvalidLambda { row, lambda: *l });
        }
        total += fuel_energy_step(*m, *l, afr_stoich, lhv, dt);
    }
    Ok(total)
}

pub(crate) fn fuel_energy_step(mdot_air: f64, lambda: f64, afr_stoich: f64, lhv: f64, dt: f64) -> f64 {
    mdot_air / (lambda * afr_stoich) * lhv * dt
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dahe_clamps_and_sums() {
        assert!((dahe(&[1000.0; 600], 1.0) - 6.0e5).abs() < 1e-6);
        assert_eq!(dahe(&[0.0; 10], 1.0), 0.0);
        assert_eq!(dahe(&[-50.0, 20.0], 1.0), 20.0);
    }

    #[test]
    fn equivalent_energy_correction() {
        assert_eq!(equivalent_energy(1.0e7, 0.0, 4.32e6, 0.3), 1.0e7);
        let e = equivalent_energy(1.0e7, 0.05, 4.32e6, 0.3);
        assert!((e - 1.072e7).abs() < 1e-3);
        assert!(equivalent_energy(1.0e7, -0.01, 4.32e6, 0.3) < 1.0e7);
    }

    #[test]
    fn report_identity_holds() {
        let r = EnergyReport::new(1.234e7, 0.0173, 4.32e6, 0.3, 1.0e6, 12.0, 3540.0);
        assert_eq!(r.e_eq - r.fuel_energy - r.soc_correction, 0.0);
    }

    #[test]
    fn maf_fuel_energy() {
        let e = fuel_energy_from_maf(&[0.0147; 100], &[1.0; 100], 14.7, 44.0e6, 1.0).unwrap();
        assert!((e - 4.4e6).abs() < 1e-3);
        assert_eq!(fuel_energy_from_maf(&[0.0; 5], &[1.0; 5], 14.7, 44e6, 1.0).unwrap(), 0.0);
        let rich = fuel_energy_from_maf(&[0.0147; 100], &[0.5; 100], 14.7, 44.0e6, 1.0).unwrap();
        assert!((rich - 2.0 * e).abs() < 1e-3);
        assert!(matches!(
            fuel_energy_from_maf(&[0.01, 0.01], &[1.0, 0.0], 14.7, 44e6, 1.0),
            Err(EnergyError::InvalidLambda { row: 1, .. })
        ));
    }
}
