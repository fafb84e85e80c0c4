//! Iris flower measurements: CSV reader, min-max current scaling and a
//! seeded random train/test split.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, InputUnit, Split};
use crate::error::{Error, Result};

/// Drive current assigned to the largest value of each feature.
pub const IRIS_MAX_CURRENT_NA: f64 = 325.0;

const N_FEATURES: usize = 4;

/// Mapping of each raw feature onto `[0, 325]` nA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IrisScaling {
    /// Feature minimum to 0, maximum to 325 nA.
    #[default]
    MinMax,
    /// Proportional, maximum to 325 nA. Keeps ratios between features,
    /// which is all a bias-free rectifier network can see.
    Max,
}

/// Reads rows of four floats followed by a class name. Class indices follow
/// order of first appearance. Each feature is min-max scaled onto
/// `[0, 325]` nA.
pub fn load_iris(path: &Path) -> Result<Dataset> {
    load_iris_scaled(path, IrisScaling::MinMax)
}

pub fn load_iris_scaled(path: &Path, scaling: IrisScaling) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut raw: Vec<[f64; N_FEATURES]> = Vec::new();
    let mut labels = Vec::new();
    let mut classes: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != N_FEATURES + 1 {
            return Err(parse_err(
                lineno + 1,
                format!("expected {} fields, found {}", N_FEATURES + 1, fields.len()),
            ));
        }
        let mut row = [0.0; N_FEATURES];
        for (slot, field) in row.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(lineno + 1, format!("bad number {field:?}")))?;
        }
        let name = fields[N_FEATURES];
        if name.is_empty() {
            return Err(parse_err(lineno + 1, "empty class name".into()));
        }
        let next = classes.len();
        labels.push(*classes.entry(name.to_string()).or_insert(next));
        raw.push(row);
    }
    if raw.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }

    let mut inputs = Vec::with_capacity(raw.len() * N_FEATURES);
    let (mut lo, mut hi) = ([f64::INFINITY; N_FEATURES], [f64::NEG_INFINITY; N_FEATURES]);
    for row in &raw {
        for f in 0..N_FEATURES {
            lo[f] = lo[f].min(row[f]);
            hi[f] = hi[f].max(row[f]);
        }
    }
    for row in &raw {
        for f in 0..N_FEATURES {
            let (base, span) = match scaling {
                IrisScaling::MinMax => (lo[f], hi[f] - lo[f]),
                IrisScaling::Max => (0.0, hi[f]),
            };
            let v = if span > 0.0 { (row[f] - base) / span } else { 0.0 };
            if v < 0.0 {
                return Err(Error::Domain(format!("negative feature value {} in {}", row[f], path.display())));
            }
            inputs.push(v * IRIS_MAX_CURRENT_NA);
        }
    }
    Dataset::new(
        N_FEATURES,
        inputs,
        labels,
        classes.len(),
        Split::All,
        InputUnit::NanoAmps,
        format!("iris:{}", path.display()),
    )
}

/// Random (unstratified) partition into `n_train` training samples and the
/// rest for testing. Each part keeps file order.
pub fn split(dataset: &Dataset, n_train: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    if n_train > dataset.len() {
        return Err(Error::Parameter(format!(
            "cannot take {n_train} training samples from {}",
            dataset.len()
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut train_idx, mut test_idx) = (order[..n_train].to_vec(), order[n_train..].to_vec());
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let mut train = dataset.select(&train_idx);
    let mut test = dataset.select(&test_idx);
    train.split = Split::Train;
    test.split = Split::Test;
    train.provenance = format!("{}#split(seed={seed},train)", dataset.provenance);
    test.provenance = format!("{}#split(seed={seed},test)", dataset.provenance);
    Ok((train, test))
}
