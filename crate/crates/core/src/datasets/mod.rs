//! Dataset ingestion and preprocessing.
//!
//! Every dataset handed to the network holds non-negative vectors; the
//! [`InputUnit`] tag records whether values are dimensionless intensities or
//! currents in nA ready to drive a device.

mod iris;
mod mnist;
mod preprocess;
mod recipe;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use iris::{load_iris, load_iris_scaled, split, IrisScaling, IRIS_MAX_CURRENT_NA};
pub use mnist::{load_mnist, load_mnist_idx, MNIST_TEST, MNIST_TRAIN};
pub use recipe::{prepare, DataRecipe, Prepared};
pub use preprocess::{reduce_to_active_pixels, scale_mean, scale_to_current, PixelSelection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputUnit {
    Intensity,
    NanoAmps,
}

/// Fixed-size labelled vectors stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    inputs: Vec<f64>,
    labels: Vec<usize>,
    n_classes: usize,
    pub split: Split,
    pub unit: InputUnit,
    pub provenance: String,
}

impl Dataset {
    /// Builds a dataset, enforcing equal lengths, label range and
    /// non-negative finite inputs.
    pub fn new(
        dim: usize,
        inputs: Vec<f64>,
        labels: Vec<usize>,
        n_classes: usize,
        split: Split,
        unit: InputUnit,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 || inputs.len() != dim * labels.len() {
            return Err(Error::Shape(format!(
                "{} input values for {} samples of dimension {dim}",
                inputs.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l >= n_classes) {
            return Err(Error::Domain(format!(
                "label {} of sample {i} outside {n_classes} classes",
                labels[i]
            )));
        }
        if let Some(i) = inputs.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "sample {} has negative or non-finite entry {}",
                i / dim,
                inputs[i]
            )));
        }
        Ok(Self {
            dim,
            inputs,
            labels,
            n_classes,
            split,
            unit,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// All inputs as one row-major block.
    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    /// Subset in the given index order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            dim: self.dim,
            inputs,
            labels,
            n_classes: self.n_classes,
            split: self.split,
            unit: self.unit,
            provenance: self.provenance.clone(),
        }
    }

    /// The first `n` samples.
    pub fn head(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&idx)
    }

    pub(crate) fn map_inputs(&self, inputs: Vec<f64>, dim: usize, unit: InputUnit) -> Dataset {
        Dataset {
            dim,
            inputs,
            labels: self.labels.clone(),
            n_classes: self.n_classes,
            split: self.split,
            unit,
            provenance: self.provenance.clone(),
        }
    }
}

const CACHE_VERSION: u32 = 1;

/// On-disk cache of a preprocessed dataset together with the pixel selection
/// that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessedDataset {
    pub version: u32,
    pub dataset: Dataset,
    pub pixel_indices: Option<Vec<usize>>,
}

impl ProcessedDataset {
    pub fn new(dataset: Dataset, pixel_indices: Option<Vec<usize>>) -> Self {
        Self {
            version: CACHE_VERSION,
            dataset,
            pixel_indices,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cached: ProcessedDataset = serde_json::from_slice(&fs::read(path)?)?;
        if cached.version != CACHE_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                offset: 0,
                reason: format!("unsupported cache version {}", cached.version),
            });
        }
        // re-validate the invariants that serde bypassed
        let d = cached.dataset;
        let dataset = Dataset::new(d.dim, d.inputs, d.labels, d.n_classes, d.split, d.unit, d.provenance)?;
        Ok(Self {
            version: cached.version,
            dataset,
            pixel_indices: cached.pixel_indices,
        })
    }
}
