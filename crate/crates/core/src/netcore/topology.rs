use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer sizes of a feed-forward network, input layer first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TopologyRepr", into = "TopologyRepr")]
pub struct Topology {
    layer_sizes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TopologyRepr {
    layer_sizes: Vec<usize>,
}

impl TryFrom<TopologyRepr> for Topology {
    type Error = Error;
    fn try_from(repr: TopologyRepr) -> Result<Self> {
        Topology::new(repr.layer_sizes)
    }
}

impl From<Topology> for TopologyRepr {
    fn from(t: Topology) -> Self {
        TopologyRepr {
            layer_sizes: t.layer_sizes,
        }
    }
}

impl Topology {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Parameter(format!(
                "topology needs at least 2 layers, got {}",
                layer_sizes.len()
            )));
        }
        if let Some(k) = layer_sizes.iter().position(|&n| n == 0) {
            return Err(Error::Parameter(format!("layer {k} has zero neurons")));
        }
        Ok(Self { layer_sizes })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len()
    }

    pub fn layer_size(&self, k: usize) -> usize {
        self.layer_sizes[k]
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Number of weight matrices (layer pairs).
    pub fn n_weight_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn neuron_count(&self) -> usize {
        self.layer_sizes.iter().sum()
    }

    /// Total synapses between consecutive layers; one multiply-accumulate each
    /// per input presentation.
    pub fn synapse_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1]).sum()
    }

    /// `(post, pre)` shape of the weight matrix feeding layer `k + 1`.
    pub fn weight_shape(&self, k: usize) -> (usize, usize) {
        (self.layer_sizes[k + 1], self.layer_sizes[k])
    }
}

impl FromStr for Topology {
    type Err = Error;

    /// Parses the canonical `N-N-...-N` spelling.
    fn from_str(s: &str) -> Result<Self> {
        let sizes = s
            .split('-')
            .map(|part| {
                part.parse::<usize>()
                    .map_err(|_| Error::Parameter(format!("bad topology string {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Topology::new(sizes)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.layer_sizes.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}
