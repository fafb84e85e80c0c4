//! Simulation, characterization and mismatch-aware training of subthreshold
//! analog neural networks built from current-mirror somata and signed 3-bit
//! synapses.
//!
//! The pipeline follows the life of a device: [`vdevice`] fabricates a
//! mismatched virtual chip, [`charlab`] measures its per-neuron transfer
//! curves, [`trainer`] fits quantized weights through the measured curves,
//! and [`bench`] evaluates accuracy, settling time and energy per operation.

pub mod bench;
pub mod charlab;
pub mod datasets;
pub mod error;
pub mod netcore;
pub mod provenance;
pub mod trainer;
pub mod vdevice;

pub use error::{Error, Result};
