use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{Topology, WeightCode, WeightMatrix};

/// One wiring of the device: every neuron above the input layer receives a
/// single +7 synapse from the neuron listed in `sources`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub id: usize,
    /// `sources[k][i]` is the layer-`k` neuron driving neuron `i` of layer `k + 1`.
    pub sources: Vec<Vec<usize>>,
    /// Current applied to every input neuron, nA.
    pub level: f64,
}

impl Configuration {
    pub fn codes(&self, topology: &Topology) -> WeightMatrix {
        let mut w = WeightMatrix::zeros(topology);
        let max = WeightCode::encode(7).expect("7 is a valid code");
        for (k, layer) in self.sources.iter().enumerate() {
            for (i, &j) in layer.iter().enumerate() {
                w.set(k, i, j, max);
            }
        }
        w
    }

    /// Whether neuron `j` of layer `k` feeds at least one downstream neuron
    /// (or is an output neuron, which is read directly).
    pub fn probes(&self, layer: usize, neuron: usize) -> bool {
        self.sources
            .get(layer)
            .is_none_or(|s| s.contains(&neuron))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub topology: Topology,
    pub seed: u64,
    pub configs: Vec<Configuration>,
}

impl MeasurementPlan {
    /// Number of configurations in which each neuron is probed.
    pub fn coverage(&self) -> Vec<Vec<usize>> {
        let mut count: Vec<Vec<usize>> = self.topology.layer_sizes().iter().map(|&n| vec![0; n]).collect();
        for c in &self.configs {
            for (k, layer) in count.iter_mut().enumerate() {
                match c.sources.get(k) {
                    Some(s) => {
                        let mut seen = vec![false; layer.len()];
                        for &j in s {
                            seen[j] = true;
                        }
                        for (n, hit) in layer.iter_mut().zip(seen) {
                            *n += hit as usize;
                        }
                    }
                    None => layer.iter_mut().for_each(|n| *n += 1),
                }
            }
        }
        count
    }
}

/// Builds `n_configs` one-to-one configurations. For each layer pair a fixed
/// random ordering of the sources is read in consecutive windows, so every
/// source is used before any repeats; the window is then assigned to the
/// targets through a fresh random permutation. Levels cycle through
/// `current_levels`.
pub fn plan_measurements(
    topology: &Topology,
    n_configs: usize,
    current_levels: &[f64],
    seed: u64,
) -> Result<MeasurementPlan> {
    if n_configs == 0 {
        return Err(Error::Parameter("at least one configuration is required".into()));
    }
    if current_levels.is_empty() || current_levels.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Parameter("current levels must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders: Vec<Vec<usize>> = (0..topology.n_weight_layers())
        .map(|k| {
            let mut o: Vec<usize> = (0..topology.layer_size(k)).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect();

    let configs = (0..n_configs)
        .map(|c| {
            let sources = orders
                .iter()
                .enumerate()
                .map(|(k, order)| {
                    let (pre, post) = (order.len(), topology.layer_size(k + 1));
                    let mut targets: Vec<usize> = (0..post).collect();
                    targets.shuffle(&mut rng);
                    let mut s = vec![0; post];
                    for (r, &t) in targets.iter().enumerate() {
                        s[t] = order[(c * post + r) % pre];
                    }
                    s
                })
                .collect();
            Configuration {
                id: c,
                sources,
                level: current_levels[c % current_levels.len()],
            }
        })
        .collect();

    let plan = MeasurementPlan {
        topology: topology.clone(),
        seed,
        configs,
    };
    let unprobed: Vec<(usize, usize)> = plan
        .coverage()
        .iter()
        .enumerate()
        .flat_map(|(k, l)| l.iter().enumerate().filter(|(_, n)| **n == 0).map(move |(i, _)| (k, i)))
        .collect();
    if !unprobed.is_empty() {
        return Err(Error::Plan { unprobed });
    }
    Ok(plan)
}
