//! Heterogeneous rectified-linear network: forward pass and exact gradients.
//!
//! Neuron `i` of layer `k` computes `x_i = max(0, a_i · Σ_j c_ij)` where the
//! contribution of a synapse is `w_ij · x_j` for non-negative weights and
//! `g⁻_j · w_ij · x_j` for negative ones. Input neurons rectify the applied
//! current: `x_j = max(0, a_j · I_j)`.

use super::gemm::{gemm, View};
use super::profile::TransferProfile;
use super::topology::Topology;
use super::weights::{EffectiveWeights, Matrix};
use crate::error::{Error, Result};

/// Activations of every layer for a single input, input layer first.
pub type Activations = Vec<Vec<f64>>;

/// Mean-squared-error loss and its gradient with respect to every weight.
#[derive(Debug, Clone)]
pub struct LossAndGradients {
    pub loss: f64,
    pub gradients: EffectiveWeights,
    /// Output-layer activations, `batch × n_out` row-major.
    pub output: Vec<f64>,
}

/// A validated network ready for evaluation. Negative weights are folded with
/// the source neuron's negative gain once, at construction.
#[derive(Debug, Clone)]
pub struct Network<'a> {
    topology: &'a Topology,
    profile: &'a TransferProfile,
    weights: &'a EffectiveWeights,
    signed: Vec<Matrix>,
}

impl<'a> Network<'a> {
    pub fn new(
        topology: &'a Topology,
        profile: &'a TransferProfile,
        weights: &'a EffectiveWeights,
    ) -> Result<Self> {
        profile.validate(topology)?;
        weights.check_shape(topology)?;
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::Domain(format!("non-finite weight {w}")));
        }
        let signed = weights
            .layers
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let gains = &profile.neg_gains[k];
                let mut out = m.clone();
                for row in out.data.chunks_exact_mut(m.cols) {
                    for (w, g) in row.iter_mut().zip(gains) {
                        if *w < 0.0 {
                            *w *= g;
                        }
                    }
                }
                out
            })
            .collect();
        Ok(Self {
            topology,
            profile,
            weights,
            signed,
        })
    }

    pub fn topology(&self) -> &Topology {
        self.topology
    }

    fn check_inputs(&self, inputs: &[f64], batch: usize) -> Result<()> {
        let n0 = self.topology.input_size();
        if inputs.len() != n0 * batch {
            return Err(Error::Shape(format!(
                "input has {} values, expected {} ({batch} x {n0})",
                inputs.len(),
                n0 * batch
            )));
        }
        if let Some(i) = inputs.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "input entry {} = {} is negative or non-finite",
                i % n0,
                inputs[i]
            )));
        }
        Ok(())
    }

    /// Layer activations for a single input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Activations> {
        self.forward_batch(input, 1)
    }

    /// Layer activations for `batch` inputs stored row-major; each returned
    /// layer is a `batch × n_k` row-major block.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Vec<Vec<f64>>> {
        self.check_inputs(inputs, batch)?;
        Ok(self.forward_unchecked(inputs, batch))
    }

    fn forward_unchecked(&self, inputs: &[f64], batch: usize) -> Vec<Vec<f64>> {
        let sizes = self.topology.layer_sizes();
        let mut layers = Vec::with_capacity(sizes.len());
        let slopes0 = &self.profile.slopes[0];
        let x0: Vec<f64> = inputs
            .chunks_exact(sizes[0])
            .flat_map(|row| row.iter().zip(slopes0).map(|(i, a)| (a * i).max(0.0)))
            .collect();
        layers.push(x0);
        for (k, w) in self.signed.iter().enumerate() {
            let (pre, post) = (sizes[k], sizes[k + 1]);
            let mut z = vec![0.0; batch * post];
            gemm(
                batch,
                pre,
                post,
                View::row_major(&layers[k], pre),
                View::transposed(&w.data, pre),
                &mut z,
            );
            let slopes = &self.profile.slopes[k + 1];
            for row in z.chunks_exact_mut(post) {
                for (v, a) in row.iter_mut().zip(slopes) {
                    *v = (a * *v).max(0.0);
                }
            }
            layers.push(z);
        }
        layers
    }

    /// Loss and gradients for a single sample.
    pub fn backward(&self, input: &[f64], target: &[f64]) -> Result<LossAndGradients> {
        self.backward_batch(input, target, 1)
    }

    /// Mean over the batch of the per-sample MSE (itself a mean over output
    /// units), and its exact gradient. The rectifier subgradient at zero is 0.
    pub fn backward_batch(
        &self,
        inputs: &[f64],
        targets: &[f64],
        batch: usize,
    ) -> Result<LossAndGradients> {
        self.check_inputs(inputs, batch)?;
        let n_out = self.topology.output_size();
        if targets.len() != n_out * batch {
            return Err(Error::Shape(format!(
                "target has {} values, expected {}",
                targets.len(),
                n_out * batch
            )));
        }
        let sizes = self.topology.layer_sizes();
        let mut acts = self.forward_unchecked(inputs, batch);
        let output = acts.last().unwrap();

        let scale = 1.0 / (n_out * batch) as f64;
        let mut loss = 0.0;
        // dL/dx for the current layer
        let mut grad_x: Vec<f64> = output
            .iter()
            .zip(targets)
            .map(|(y, t)| {
                let e = y - t;
                loss += e * e;
                2.0 * e * scale
            })
            .collect();
        loss *= scale;

        let mut gradients = EffectiveWeights::zeros(self.topology);
        for k in (0..self.signed.len()).rev() {
            let (pre, post) = (sizes[k], sizes[k + 1]);
            let slopes = &self.profile.slopes[k + 1];
            // dL/dz = dL/dx · a · [x > 0]
            let x = &acts[k + 1];
            let mut delta = grad_x;
            for (row_d, row_x) in delta.chunks_exact_mut(post).zip(x.chunks_exact(post)) {
                for ((d, xv), a) in row_d.iter_mut().zip(row_x).zip(slopes) {
                    *d = if *xv > 0.0 { *d * a } else { 0.0 };
                }
            }
            // dL/dw̃ = δᵀ · x_prev
            let gw = &mut gradients.layers[k];
            gemm(
                post,
                batch,
                pre,
                View::transposed(&delta, post),
                View::row_major(&acts[k], pre),
                &mut gw.data,
            );
            let gains = &self.profile.neg_gains[k];
            let raw = &self.weights.layers[k];
            for (g_row, w_row) in gw.data.chunks_exact_mut(pre).zip(raw.data.chunks_exact(pre)) {
                for ((g, w), gain) in g_row.iter_mut().zip(w_row).zip(gains) {
                    if *w < 0.0 {
                        *g *= gain;
                    }
                }
            }
            if k > 0 {
                let mut next = vec![0.0; batch * pre];
                gemm(
                    batch,
                    post,
                    pre,
                    View::row_major(&delta, post),
                    View::row_major(&self.signed[k].data, pre),
                    &mut next,
                );
                grad_x = next;
            } else {
                grad_x = Vec::new();
            }
        }
        let output = acts.pop().unwrap();
        Ok(LossAndGradients {
            loss,
            gradients,
            output,
        })
    }
}

/// Layer activations of `input` through the heterogeneous network.
pub fn forward(
    topology: &Topology,
    profile: &TransferProfile,
    weights: &EffectiveWeights,
    input: &[f64],
) -> Result<Activations> {
    Network::new(topology, profile, weights)?.forward(input)
}

/// MSE loss against `target` and its gradient with respect to each weight.
pub fn backward(
    topology: &Topology,
    profile: &TransferProfile,
    weights: &EffectiveWeights,
    input: &[f64],
    target: &[f64],
) -> Result<LossAndGradients> {
    Network::new(topology, profile, weights)?.backward(input, target)
}

/// Index of the first maximal entry.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
