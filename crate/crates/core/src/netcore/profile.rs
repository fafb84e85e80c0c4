use serde::{Deserialize, Serialize};

use super::topology::Topology;
use crate::error::{Error, Result};

/// Per-neuron description of a specific device: rectifier slope `a_i` for
/// every neuron (input layer included) and the relative strength `g⁻_j` of a
/// unit negative weight sourced from neuron `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferProfile {
    pub slopes: Vec<Vec<f64>>,
    pub neg_gains: Vec<Vec<f64>>,
}

impl TransferProfile {
    /// The perfectly matched device: all slopes and negative gains equal 1.
    pub fn ideal(topology: &Topology) -> Self {
        let ones: Vec<Vec<f64>> = topology
            .layer_sizes()
            .iter()
            .map(|&n| vec![1.0; n])
            .collect();
        Self {
            slopes: ones.clone(),
            neg_gains: ones,
        }
    }

    pub fn validate(&self, topology: &Topology) -> Result<()> {
        let sizes = topology.layer_sizes();
        for (name, table) in [("slopes", &self.slopes), ("neg_gains", &self.neg_gains)] {
            if table.len() != sizes.len() {
                return Err(Error::Shape(format!(
                    "profile has {} {name} layers, topology {topology} has {}",
                    table.len(),
                    sizes.len()
                )));
            }
            for (k, (layer, &n)) in table.iter().zip(sizes).enumerate() {
                if layer.len() != n {
                    return Err(Error::Shape(format!(
                        "profile {name} layer {k} has {} entries, expected {n}",
                        layer.len()
                    )));
                }
                if let Some(i) = layer.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::Domain(format!(
                        "profile {name}[{k}][{i}] = {} is not a positive finite value",
                        layer[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Divides every layer's slopes by that layer's mean slope. Negative gains
    /// are ratios and stay untouched.
    pub fn normalized(&self) -> Self {
        let slopes = self
            .slopes
            .iter()
            .map(|layer| {
                let mean = layer.iter().sum::<f64>() / layer.len() as f64;
                layer.iter().map(|a| a / mean).collect()
            })
            .collect();
        Self {
            slopes,
            neg_gains: self.neg_gains.clone(),
        }
    }

    pub fn topology(&self) -> Result<Topology> {
        Topology::new(self.slopes.iter().map(Vec::len).collect())
    }
}
