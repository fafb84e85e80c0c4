//! Closed-loop evaluation: classification accuracy on a device or the
//! behavioral model, and settling time and energy of pattern transitions.

mod accuracy;
mod dynamics;
mod report;

pub use accuracy::{evaluate_device, evaluate_model, AccuracyReport};
pub use dynamics::{benchmark_dynamics, mean_drive, DynamicsConfig};
pub use report::{read_records_csv, write_records_csv, Aggregates, BenchReport, SampleRecord, REPORT_SCHEMA};
