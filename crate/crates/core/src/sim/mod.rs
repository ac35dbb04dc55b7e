//! Error-rate simulation studies driven by scenario files.

pub mod harness;
pub mod scenario;
pub mod table;

pub use harness::{estimate_error_rates, generate_dataset, repetition_rng};
pub use scenario::{parse_scenario, read_scenario, DesignCase, LinearModel, Scenario};
pub use table::{Cell, ErrorRateTable};
