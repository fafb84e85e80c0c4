use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::EffectiveWeights;

/// ADAM moment estimates over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Adam {
    pub fn new(n_params: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            beta1,
            beta2,
            epsilon,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of `params`, followed by clipping to
    /// `[-1, 1]`. Non-finite gradients are rejected before any state changes.
    pub fn update(&mut self, params: &mut EffectiveWeights, grads: &EffectiveWeights, lr: f64) -> Result<()> {
        if grads.len() != self.m.len() || params.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} parameters, got {} weights and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(g) = grads.iter().find(|g| !g.is_finite()) {
            return Err(Error::Domain(format!("non-finite gradient {g}")));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        for (((w, g), m), v) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w = (*w - lr * m_hat / (v_hat.sqrt() + eps)).clamp(-1.0, 1.0);
        }
        Ok(())
    }
}

/// Adds the subgradient of `l1 · Σ_{w<0} |w|` to `grads`; non-negative
/// weights are unaffected.
pub fn regularize(grads: &mut EffectiveWeights, shadow: &EffectiveWeights, l1_negative: f64) {
    if l1_negative == 0.0 {
        return;
    }
    for (g, w) in grads.iter_mut().zip(shadow.iter()) {
        if *w < 0.0 {
            *g -= l1_negative;
        }
    }
}
