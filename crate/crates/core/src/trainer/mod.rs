//! Mismatch-aware quantized training through a measured transfer profile.

mod adam;
mod model;
mod quantize;
mod train;

pub use adam::{regularize, Adam};
pub use model::{EpochMetrics, TrainedModel, MODEL_SCHEMA};
pub use quantize::{quantize, quantize_weights};
pub use train::{behavioral_accuracy, predict, train, Hyperparams, TrainState, WeightInit};
