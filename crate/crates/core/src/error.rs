use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the toolkit. Variants are grouped so that callers (the CLI
/// in particular) can map them onto coarse exit-code classes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside [{min}, {max}]")]
    Range { value: i64, min: i64, max: i64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("measurement plan cannot cover every neuron; unprobed: {}", format_neurons(.unprobed))]
    Plan { unprobed: Vec<(usize, usize)> },

    #[error("cannot fit layer {layer} neuron {neuron}: {reason}")]
    Fit {
        layer: usize,
        neuron: usize,
        reason: String,
    },

    #[error("measurement failed in configuration {config}: {reason}")]
    Measurement { config: usize, reason: String },

    #[error("training aborted at epoch {epoch}, batch {batch}: {reason}")]
    Training {
        epoch: usize,
        batch: usize,
        reason: String,
    },

    #[error("format error in {path} at byte {offset}: {reason}")]
    Format {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("parse error in {path} line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("provenance mismatch: {0}")]
    Provenance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_neurons(list: &[(usize, usize)]) -> String {
    let shown: Vec<String> = list
        .iter()
        .take(16)
        .map(|(l, n)| format!("L{l}N{n}"))
        .collect();
    if list.len() > shown.len() {
        format!("{} ... ({} total)", shown.join(", "), list.len())
    } else {
        shown.join(", ")
    }
}
