use log::warn;
use serde::{Deserialize, Serialize};

use super::protocol::MeasurementRecord;
use crate::error::{Error, Result};
use crate::netcore::{Topology, TransferProfile};

/// Slope assigned to a neuron that never produced output.
pub const DEAD_SLOPE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Least-squares slopes before normalization.
    pub raw: Vec<Vec<f64>>,
    /// Slopes divided by their layer mean.
    pub normalized: Vec<Vec<f64>>,
    pub points: Vec<Vec<usize>>,
    /// RMS of `out - a·in` per neuron, nA.
    pub residual_rms: Vec<Vec<f64>>,
    pub dead: Vec<(usize, usize)>,
}

impl SlopeFit {
    /// Normalized slopes with unit negative gains.
    pub fn profile(&self) -> TransferProfile {
        TransferProfile {
            slopes: self.normalized.clone(),
            neg_gains: self.normalized.iter().map(|l| vec![1.0; l.len()]).collect(),
        }
    }
}

/// Fits `out = a·in` through the origin for every neuron,
/// `a = Σ in·out / Σ in²`, over the usable points (`in > 0`), then
/// normalizes each layer to mean slope 1.
pub fn fit_slopes(topology: &Topology, records: &[MeasurementRecord]) -> Result<SlopeFit> {
    let sizes = topology.layer_sizes();
    let zeros = || -> Vec<Vec<f64>> { sizes.iter().map(|&n| vec![0.0; n]).collect() };
    let (mut sxy, mut sxx, mut syy) = (zeros(), zeros(), zeros());
    let mut points: Vec<Vec<usize>> = sizes.iter().map(|&n| vec![0; n]).collect();

    for rec in records.iter().filter(|r| r.usable) {
        for p in &rec.readings {
            if p.layer >= sizes.len() || p.neuron >= sizes[p.layer] {
                return Err(Error::Shape(format!(
                    "reading for layer {} neuron {} outside {topology}",
                    p.layer, p.neuron
                )));
            }
            if p.input > 0.0 {
                let (k, i) = (p.layer, p.neuron);
                sxy[k][i] += p.input * p.output;
                sxx[k][i] += p.input * p.input;
                syy[k][i] += p.output * p.output;
                points[k][i] += 1;
            }
        }
    }

    let mut raw = zeros();
    let mut residual_rms = zeros();
    let mut dead = Vec::new();
    for k in 0..sizes.len() {
        for i in 0..sizes[k] {
            let n = points[k][i];
            if n < 2 {
                return Err(Error::Fit {
                    layer: k,
                    neuron: i,
                    reason: format!("{n} usable points, need at least 2"),
                });
            }
            let a = sxy[k][i] / sxx[k][i];
            // Σ(y - a x)² = Σy² - 2aΣxy + a²Σx²
            let sse = (syy[k][i] - 2.0 * a * sxy[k][i] + a * a * sxx[k][i]).max(0.0);
            residual_rms[k][i] = (sse / n as f64).sqrt();
            raw[k][i] = if a > DEAD_SLOPE {
                a
            } else {
                warn!("layer {k} neuron {i} is dead (slope {a:.3e}), using {DEAD_SLOPE}");
                dead.push((k, i));
                DEAD_SLOPE
            };
        }
    }
    let normalized = raw
        .iter()
        .map(|l| {
            let mean = l.iter().sum::<f64>() / l.len() as f64;
            l.iter().map(|a| a / mean).collect()
        })
        .collect();
    Ok(SlopeFit {
        raw,
        normalized,
        points,
        residual_rms,
        dead,
    })
}
