//! Regenerates `data/alpha_samples.csv`: vent temperatures drawn from a
//! reference model over the operating box with 0.5 °C measurement noise.
//!
//!     cargo run -p ecoheat-core --example alpha_samples > data/alpha_samples.csv

use ecoheat_core::hvac::{vent_air_temp, AlphaCoeffs, AlphaSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = AlphaCoeffs {
        a1: 4.8,
        a2: 0.054,
        a3: -0.125,
        a4: -34.0,
        t_sp_floor: 15.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 0.5)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for _ in 0..200 {
        let t_sp = (rng.gen_range(18.0..=24.0_f64) * 4.0).round() / 4.0;
        let t_cl = (rng.gen_range(40.0..=90.0_f64) * 10.0).round() / 10.0;
        let t_ain = vent_air_temp(t_sp, t_cl, &reference) + noise.sample(&mut rng);
        w.serialize(AlphaSample {
            t_sp,
            t_cl,
            t_ain: (t_ain * 100.0).round() / 100.0,
        })?;
    }
    w.flush()?;
    Ok(())
}
