use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::Hyperparams;
use crate::datasets::DataRecipe;
use crate::error::{Error, Result};
use crate::netcore::{EffectiveWeights, Topology, WeightMatrix};
use crate::provenance::content_hash;

pub const MODEL_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
}

/// Result of a training session, ready to be programmed into a device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema: u32,
    pub topology: Topology,
    pub codes: WeightMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow: Option<EffectiveWeights>,
    pub profile_hash: String,
    pub hyperparams: Hyperparams,
    pub metrics: Vec<EpochMetrics>,
    /// How the training data was prepared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_recipe: Option<DataRecipe>,
}

impl TrainedModel {
    pub fn new(
        topology: Topology,
        codes: WeightMatrix,
        shadow: Option<EffectiveWeights>,
        profile_hash: String,
        hyperparams: Hyperparams,
        metrics: Vec<EpochMetrics>,
    ) -> Self {
        Self {
            schema: MODEL_SCHEMA,
            topology,
            codes,
            shadow,
            profile_hash,
            hyperparams,
            metrics,
            data_recipe: None,
        }
    }

    /// Effective weights of the exported codes.
    pub fn weights(&self) -> EffectiveWeights {
        self.codes.effective()
    }

    pub fn hash(&self) -> Result<String> {
        content_hash(self)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: TrainedModel = serde_json::from_slice(&fs::read(path)?)?;
        if model.schema != MODEL_SCHEMA {
            return Err(Error::Format {
                path: path.to_path_buf(),
                offset: 0,
                reason: format!("unsupported model schema {}", model.schema),
            });
        }
        model.codes.check_shape(&model.topology)?;
        if let Some(s) = &model.shadow {
            s.check_shape(&model.topology)?;
        }
        Ok(model)
    }

    /// Training log as CSV: `epoch,train_loss,train_acc,test_acc`.
    pub fn write_log_csv(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        writeln!(f, "epoch,train_loss,train_acc,test_acc")?;
        for m in &self.metrics {
            let test = m.test_acc.map_or(String::new(), |a| a.to_string());
            writeln!(f, "{},{},{},{}", m.epoch, m.train_loss, m.train_acc, test)?;
        }
        Ok(())
    }
}
