use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{load_iris_scaled, IrisScaling, load_mnist, reduce_to_active_pixels, scale_mean, scale_to_current, split, Dataset};
use crate::error::Result;

/// How a train/test pair in nA was derived from raw files. Stored with
/// trained models so the preparation can be repeated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataRecipe {
    Mnist {
        pixels: usize,
        target_mean: f64,
        na_per_unit: f64,
    },
    Iris {
        n_train: usize,
        split_seed: u64,
        #[serde(default)]
        scaling: IrisScaling,
    },
}

impl DataRecipe {
    /// 196 most active pixels, images at mean 0.04, 375 nA per unit
    /// (15 nA mean drive).
    pub fn mnist() -> Self {
        DataRecipe::Mnist {
            pixels: 196,
            target_mean: 0.04,
            na_per_unit: 375.0,
        }
    }

    pub fn iris(split_seed: u64) -> Self {
        DataRecipe::Iris {
            n_train: 120,
            split_seed,
            scaling: IrisScaling::Max,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub pixel_indices: Option<Vec<usize>>,
}

/// Loads and preprocesses `source`: a directory of IDX files for MNIST, the
/// CSV file for Iris.
pub fn prepare(recipe: &DataRecipe, source: &Path) -> Result<Prepared> {
    match *recipe {
        DataRecipe::Mnist {
            pixels,
            target_mean,
            na_per_unit,
        } => {
            let (train, test) = load_mnist(source)?;
            let (train, sel) = reduce_to_active_pixels(&train, pixels)?;
            let test = sel.apply(&test)?;
            let currents = |d: &Dataset| -> Result<Dataset> { scale_to_current(&scale_mean(d, target_mean)?.0, na_per_unit) };
            Ok(Prepared {
                train: currents(&train)?,
                test: currents(&test)?,
                pixel_indices: Some(sel.indices),
            })
        }
        DataRecipe::Iris {
            n_train,
            split_seed,
            scaling,
        } => {
            let (train, test) = split(&load_iris_scaled(source, scaling)?, n_train, split_seed)?;
            Ok(Prepared {
                train,
                test,
                pixel_indices: None,
            })
        }
    }
}
