use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dut::DeviceUnderTest;
use crate::error::{Error, Result};
use crate::netcore::{Topology, WeightCode, WeightMatrix};

/// Independent monitor choices averaged per neuron.
pub const MONITORS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeGains {
    /// `gains[k][j]` for every neuron; output-layer neurons drive no
    /// synapses and stay at 1.
    pub gains: Vec<Vec<f64>>,
    /// Neurons whose gain could not be measured and defaulted to 1.
    pub flagged: Vec<(usize, usize)>,
}

/// Round-robin one-to-one wiring below `layer` so that every neuron of
/// `layer` is driven.
fn drive_path(topology: &Topology, layer: usize) -> WeightMatrix {
    let mut w = WeightMatrix::zeros(topology);
    let max = WeightCode::encode(7).expect("7 is a valid code");
    for k in 0..layer {
        let (post, pre) = topology.weight_shape(k);
        for i in 0..post {
            w.set(k, i, i % pre, max);
        }
    }
    w
}

/// Estimates the negative-branch gain of every source neuron.
///
/// A monitor neuron `m` one layer up receives +7 from a reference `r`
/// (response A), +7 from `r` together with `-mag` from the source `j`
/// (response B), and +7 from `j` alone (response C). Then
/// `g⁻_j = (A − B) / (C · mag/7)`. The monitor's input current is the probe.
/// When B clips at zero the magnitude is reduced; dead sources are flagged
/// and default to 1.
pub fn estimate_negative_gains<D: DeviceUnderTest + ?Sized>(
    dut: &mut D,
    level: f64,
    seed: u64,
) -> Result<NegativeGains> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::Parameter(format!("drive level {level} must be positive")));
    }
    let topo = dut.topology().clone();
    let sizes = topo.layer_sizes().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gains: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![1.0; n]).collect();
    let mut flagged = Vec::new();
    let input = vec![level; topo.input_size()];
    let plus = WeightCode::encode(7).expect("7 is a valid code");
    // Responses below this are treated as a neuron switched off.
    let floor = level * 1e-9;

    for k in 0..topo.n_weight_layers() {
        let base = drive_path(&topo, k);
        let probe = |dut: &mut D, conns: &[(usize, usize, WeightCode)]| -> Result<f64> {
            let mut w = base.clone();
            for &(m, j, c) in conns {
                w.set(k, m, j, c);
            }
            dut.program(&w)?;
            let r = dut.apply_input(&input)?;
            Ok(r.soma_inputs[k + 1][conns[0].0])
        };

        for j in 0..sizes[k] {
            let mut monitors: Vec<usize> = (0..sizes[k + 1]).collect();
            monitors.shuffle(&mut rng);
            let references: Vec<usize> = (0..sizes[k]).filter(|&r| r != j).collect();
            let mut estimates = Vec::new();
            let mut dead = false;
            for t in 0..MONITORS {
                let m = monitors[t % monitors.len()];
                let c = probe(dut, &[(m, j, plus)])?;
                if c <= floor {
                    dead = true;
                    break;
                }
                // A reference whose response is comparable to C, so that
                // some negative magnitude leaves the monitor conducting.
                let mut chosen = None;
                let mut candidates = references.clone();
                candidates.shuffle(&mut rng);
                for &r in candidates.iter().take(8) {
                    let a = probe(dut, &[(m, r, plus)])?;
                    if a > 0.25 * c {
                        chosen = Some((r, a));
                        break;
                    }
                }
                let Some((r, a)) = chosen else { break };
                let mut estimate = None;
                for mag in (1..=7).rev() {
                    let neg = WeightCode::encode(-mag).expect("magnitude within range");
                    let b = probe(dut, &[(m, r, plus), (m, j, neg)])?;
                    if b > floor {
                        estimate = Some((a - b) / (c * mag as f64 / 7.0));
                        break;
                    }
                }
                match estimate {
                    Some(g) => estimates.push(g),
                    None => {
                        return Err(Error::Fit {
                            layer: k,
                            neuron: j,
                            reason: "monitor saturates at every negative magnitude".into(),
                        })
                    }
                }
            }
            if dead || estimates.is_empty() {
                warn!("layer {k} neuron {j}: negative gain not measurable, using 1");
                flagged.push((k, j));
                continue;
            }
            let g = estimates.iter().sum::<f64>() / estimates.len() as f64;
            if !(g > 0.0 && g.is_finite()) {
                warn!("layer {k} neuron {j}: implausible negative gain {g}, using 1");
                flagged.push((k, j));
                continue;
            }
            gains[k][j] = g;
        }
    }
    Ok(NegativeGains { gains, flagged })
}
