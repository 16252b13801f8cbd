use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{vent_air_temp, AlphaCoeffs, HvacError};

/// One calibration measurement; CSV columns `T_sp_C,T_cl_C,T_ain_C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSample {
    #[serde(rename = "T_sp_C")]
    pub t_sp: f64,
    #[serde(rename = "T_cl_C")]
    pub t_cl: f64,
    #[serde(rename = "T_ain_C")]
    pub t_ain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaFit {
    pub alpha: AlphaCoeffs,
    /// Root-mean-square residual, °C.
    pub rms: f64,
    pub samples: usize,
}

const FLOOR: f64 = 15.0;

/// Reads `T_sp_C,T_cl_C,T_ain_C` rows; every value must be finite.
pub fn read_samples<R: Read>(input: R) -> Result<Vec<AlphaSample>, HvacError> {
    let bad = |e: csv::Error| HvacError::InvalidSamples(e.to_string());
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.deserialize::<AlphaSample>().enumerate() {
        let s = rec.map_err(bad)?;
        if !(s.t_sp.is_finite() && s.t_cl.is_finite() && s.t_ain.is_finite()) {
            return Err(HvacError::InvalidSamples(format!("row {} is not finite", i + 1)));
        }
        out.push(s);
    }
    Ok(out)
}

/// Least-squares identification of the vent air model.
pub fn fit_alpha(samples: &[AlphaSample]) -> Result<AlphaFit, HvacError> {
    let n = samples.len();
    let rank_err = |rank| HvacError::RankDeficient { rank, samples: n };
    if n < 4 {
        return Err(rank_err(n));
    }
    let a = DMatrix::from_fn(n, 4, |i, j| {
        let s = &samples[i];
        match j {
            0 => s.t_sp,
            1 => (s.t_sp - FLOOR) * s.t_cl,
            2 => s.t_sp * s.t_sp,
            _ => 1.0,
        }
    });
    let b = DVector::from_iterator(n, samples.iter().map(|s| s.t_ain));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * n.max(4) as f64 * f64::EPSILON * 16.0;
    let rank = svd.rank(tol);
    if rank < 4 {
        return Err(rank_err(rank));
    }
    let x = svd.solve(&b, tol).map_err(|_| rank_err(rank))?;
    let alpha = AlphaCoeffs {
        a1: x[0],
        a2: x[1],
        a3: x[2],
        a4: x[3],
        t_sp_floor: FLOOR,
    };
    let sse: f64 = samples
        .iter()
        .map(|s| (vent_air_temp(s.t_sp, s.t_cl, &alpha) - s.t_ain).powi(2))
        .sum();
    Ok(AlphaFit {
        alpha,
        rms: (sse / n as f64).sqrt(),
        samples: n,
    })
}
