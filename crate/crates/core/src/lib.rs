//! Desk-scale reproduction of signal-aware eco-driving and predictive
//! cabin heating for a power-split hybrid.

// `!(x > 0.0)` style checks are kept so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod energy;
pub mod harness;
pub mod hvac;
pub mod plant;
pub mod traffic;

pub use energy::EnergyReport;
pub use harness::{run_scenario, Driving, Heating, RunResult, Scenario, Setup};
pub use hvac::HvacCommand;
pub use plant::PlantState;
pub use traffic::{Corridor, Intersection, SpeedProfile};
