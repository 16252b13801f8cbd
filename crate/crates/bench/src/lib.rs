//! Fixtures shared by the criterion benches.

use ecoheat_core::{Driving, Heating, Scenario};

/// Planned speeds of a launch towards cruise, one per second.
pub fn launch_preview(samples: usize) -> Vec<f64> {
    (0..samples).map(|k| (k as f64 * 0.6).min(17.9)).collect()
}

/// The cold eco-driving, eco-heating run with the extended third stop.
pub fn cold_long_stop() -> Scenario {
    let mut s = Scenario::new("bench", Driving::Eco, Heating::Eco, -11.0);
    s.long_stop = true;
    s
}
