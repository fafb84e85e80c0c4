//! Measurement of a device's per-neuron transfer curves through one-to-one
//! probe configurations.

mod characterize;
mod dut;
mod fit;
mod negative;
mod plan;
mod protocol;

pub use characterize::{characterize, CharacterizeOptions, FitStats, ProfileFile, PROFILE_SCHEMA};
pub use dut::{DeviceUnderTest, NoisyDut, Readout};
pub use fit::{fit_slopes, SlopeFit, DEAD_SLOPE};
pub use negative::{estimate_negative_gains, NegativeGains, MONITORS};
pub use plan::{plan_measurements, Configuration, MeasurementPlan};
pub use protocol::{read_measurement_log, run_protocol, write_measurement_log, MeasurementRecord, Reading};
