//! Replay of logged drives. Row `k` carries the state at `t_k` and the
//! rates held over `[t_k, t_{k+1})`; the final row only closes the run.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use super::{fuel_energy_step, EnergyError, EnergyReport, IDLE_SPEED_MPS};
use crate::hvac::dahp;
use crate::plant::PowertrainParams;

pub const REPLAY_HEADER: &str =
    "t_s,v_mps,mdot_air_kgps,lambda,soc,engine_on,T_ain_C,T_amb_C,mdot_bl_kgps";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t_s: f64,
    pub v_mps: f64,
    pub mdot_air_kgps: f64,
    pub lambda: f64,
    pub soc: f64,
    #[serde(deserialize_with = "flag")]
    pub engine_on: u8,
    #[serde(rename = "T_ain_C")]
    pub t_ain_c: f64,
    #[serde(rename = "T_amb_C")]
    pub t_amb_c: f64,
    pub mdot_bl_kgps: f64,
}

fn flag<'de, D: Deserializer<'de>>(d: D) -> Result<u8, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim() {
        "1" | "true" => Ok(1),
        "0" | "false" => Ok(0),
        other => Err(serde::de::Error::custom(format!("engine_on must be 0 or 1, got {other:?}"))),
    }
}

pub fn write_log<W: Write>(rows: &[LogRow], out: W) -> Result<(), EnergyError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log<R: Read>(input: R) -> Result<Vec<LogRow>, EnergyError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let missing: Vec<String> = REPLAY_HEADER
        .split(',')
        .filter(|c| !headers.iter().any(|h| h.trim() == *c))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(EnergyError::SchemaError { missing });
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Energy report of a log, integrating each row's rates over the interval
/// to the next timestamp.
pub fn replay_rows(rows: &[LogRow], pt: &PowertrainParams, c_p: f64) -> Result<EnergyReport, EnergyError> {
    if rows.len() < 2 {
        return Err(EnergyError::TooShort(rows.len()));
    }
    let mut fuel = 0.0;
    let mut heat = 0.0;
    let mut idle = 0.0;
    let mut distance = 0.0;
    for (k, pair) in rows.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t_s - a.t_s;
        if !(dt > 0.0) {
            return Err(EnergyError::MonotonicityError {
                row: k + 1,
                prev: a.t_s,
                t: b.t_s,
            });
        }
        if !(a.lambda > 0.0) {
            return Err(EnergyError::InvalidLambda {
                row: k,
                lambda: a.lambda,
            });
        }
        fuel += fuel_energy_step(a.mdot_air_kgps, a.lambda, pt.afr_stoich, pt.lhv, dt);
        heat += dahp(a.t_ain_c, a.t_amb_c, a.mdot_bl_kgps, c_p).max(0.0) * dt;
        if a.v_mps.max(b.v_mps) < IDLE_SPEED_MPS && a.engine_on == 1 {
            idle += dt;
        }
        distance += 0.5 * (a.v_mps + b.v_mps) * dt;
    }
    let delta_soc = rows[0].soc - rows[rows.len() - 1].soc;
    Ok(EnergyReport::new(fuel, delta_soc, pt.e_batt, pt.eta_sys, heat, idle, distance))
}

pub fn replay_log(path: &Path, pt: &PowertrainParams, c_p: f64) -> Result<EnergyReport, EnergyError> {
    let file = std::fs::File::open(path)?;
    let rows = read_log(std::io::BufReader::new(file))?;
    replay_rows(&rows, pt, c_p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, v: f64, mdot_air: f64, soc: f64, on: u8) -> LogRow {
        LogRow {
            t_s: t,
            v_mps: v,
            mdot_air_kgps: mdot_air,
            lambda: 1.0,
            soc,
            engine_on: on,
            t_ain_c: 40.0,
            t_amb_c: 0.0,
            mdot_bl_kgps: 0.05,
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_log(&[row(0.0, 0.0, 0.0, 0.6, 0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), REPLAY_HEADER);
    }

    #[test]
    fn round_trip_and_integrate() {
        let rows = vec![
            row(0.0, 0.0, 0.0147, 0.60, 1),
            row(1.0, 0.3, 0.0147, 0.60, 1),
            row(2.0, 2.0, 0.0, 0.60, 0),
        ];
        let mut buf = Vec::new();
        write_log(&rows, &mut buf).unwrap();
        let back = read_log(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let pt = PowertrainParams::default();
        let r = replay_rows(&back, &pt, 1005.0).unwrap();
        assert!((r.fuel_energy - 2.0 * 0.001 * pt.lhv).abs() < 1e-6);
        assert_eq!(r.delta_soc, 0.0);
        assert_eq!(r.e_eq, r.fuel_energy);
        assert_eq!(r.engine_idle_seconds, 1.0);
        assert!((r.e_dahe - 2.0 * 2010.0).abs() < 1e-9);
        assert!((r.distance - 1.3).abs() < 1e-12);
    }

    #[test]
    fn launch_is_not_idle() {
        let rows = vec![row(0.0, 0.0, 0.01, 0.6, 1), row(1.0, 2.0, 0.01, 0.6, 1), row(2.0, 2.0, 0.0, 0.6, 0)];
        let r = replay_rows(&rows, &PowertrainParams::default(), 1005.0).unwrap();
        assert_eq!(r.engine_idle_seconds, 0.0);
    }

    #[test]
    fn shuffled_timestamps() {
        let rows = vec![row(0.0, 0.0, 0.0, 0.6, 0), row(2.0, 0.0, 0.0, 0.6, 0), row(1.0, 0.0, 0.0, 0.6, 0)];
        let err = replay_rows(&rows, &PowertrainParams::default(), 1005.0).unwrap_err();
        assert!(matches!(err, EnergyError::MonotonicityError { row: 2, .. }));
    }

    #[test]
    fn missing_column() {
        let text = "t_s,v_mps,lambda\n0,0,1\n";
        let err = read_log(text.as_bytes()).unwrap_err();
        match err {
            EnergyError::SchemaError { missing } => assert!(missing.contains(&"soc".to_string())),
            other => panic!("{other}"),
        }
    }
}
