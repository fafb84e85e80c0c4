use log::warn;
use serde::{Deserialize, Serialize};

use super::{Dataset, InputUnit, Split};
use crate::error::{Error, Result};

/// Indices (ascending) of the input components kept after reduction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelSelection {
    pub source_dim: usize,
    pub indices: Vec<usize>,
}

impl PixelSelection {
    /// Picks the `k` components with the highest mean over `train`; ties go to
    /// the lower index. Refuses to look at a test split.
    pub fn from_train(train: &Dataset, k: usize) -> Result<Self> {
        if train.split == Split::Test {
            return Err(Error::Parameter(
                "pixel selection must be computed on training data".into(),
            ));
        }
        let dim = train.dim();
        if k == 0 || k > dim {
            return Err(Error::Parameter(format!("cannot keep {k} of {dim} components")));
        }
        let mut sums = vec![0.0; dim];
        for row in train.inputs().chunks_exact(dim) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        let mut order: Vec<usize> = (0..dim).collect();
        // sums share the sample count, so ranking by sum ranks by mean
        order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
        let mut indices = order[..k].to_vec();
        indices.sort_unstable();
        Ok(Self {
            source_dim: dim,
            indices,
        })
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.dim() != self.source_dim {
            return Err(Error::Shape(format!(
                "selection expects dimension {}, dataset has {}",
                self.source_dim,
                dataset.dim()
            )));
        }
        let k = self.indices.len();
        let mut out = Vec::with_capacity(dataset.len() * k);
        for row in dataset.inputs().chunks_exact(dataset.dim()) {
            out.extend(self.indices.iter().map(|&i| row[i]));
        }
        Ok(dataset.map_inputs(out, k, dataset.unit))
    }
}

/// Keeps the `k` most active components of a training set.
pub fn reduce_to_active_pixels(train: &Dataset, k: usize) -> Result<(Dataset, PixelSelection)> {
    let selection = PixelSelection::from_train(train, k)?;
    Ok((selection.apply(train)?, selection))
}

/// Rescales every sample to mean `target_mean`. All-zero samples are left
/// untouched and their indices returned.
pub fn scale_mean(dataset: &Dataset, target_mean: f64) -> Result<(Dataset, Vec<usize>)> {
    if !(target_mean > 0.0 && target_mean.is_finite()) {
        return Err(Error::Parameter(format!("target mean {target_mean} must be positive")));
    }
    let dim = dataset.dim();
    let mut zero_samples = Vec::new();
    let mut out = Vec::with_capacity(dataset.inputs().len());
    for (i, row) in dataset.inputs().chunks_exact(dim).enumerate() {
        let mean = row.iter().sum::<f64>() / dim as f64;
        if mean > 0.0 {
            let f = target_mean / mean;
            out.extend(row.iter().map(|v| v * f));
        } else {
            zero_samples.push(i);
            out.extend_from_slice(row);
        }
    }
    if !zero_samples.is_empty() {
        warn!("{} all-zero samples left unscaled", zero_samples.len());
    }
    Ok((dataset.map_inputs(out, dim, dataset.unit), zero_samples))
}

/// Multiplies every entry by `na_per_unit`, producing device drive currents.
pub fn scale_to_current(dataset: &Dataset, na_per_unit: f64) -> Result<Dataset> {
    if !(na_per_unit > 0.0 && na_per_unit.is_finite()) {
        return Err(Error::Parameter(format!("current scale {na_per_unit} must be positive")));
    }
    let out = dataset.inputs().iter().map(|v| v * na_per_unit).collect();
    Ok(dataset.map_inputs(out, dataset.dim(), InputUnit::NanoAmps))
}
