//! Virtual fabrication: mismatched device instances, their DC operating
//! point, transient settling and supply energy.

mod device;
mod geometry;
mod transient;

pub use device::{DcSolution, MismatchParams, SigmaRule, SynapseShifts, VirtualDevice, DEVICE_SCHEMA};
pub use geometry::{GeometryTable, TransistorGeometry, SOMA_TRANSISTORS};
pub use transient::{
    energy, time_to_output, transient, Energy, RateCurrent, TimeToOutput, TransientConfig, TransientTrace, VDD,
};
