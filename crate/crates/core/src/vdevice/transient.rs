use std::io::Write;

use serde::{Deserialize, Serialize};

use super::device::VirtualDevice;
use crate::error::{Error, Result};
use crate::netcore::{argmax, WeightMatrix};

/// Supply voltage, V.
pub const VDD: f64 = 1.8;

/// Which current sets a neuron's relaxation rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateCurrent {
    /// Present rectified input current only.
    Input,
    /// Larger of the input current and the current still held by the soma,
    /// so a neuron whose input is cut discharges at its own bias rather
    /// than at the leakage floor.
    InputOrState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientConfig {
    /// Step, µs.
    pub dt: f64,
    /// Simulated horizon, µs.
    pub t_end: f64,
    /// Leakage floor on the rate current, nA.
    pub i_floor: f64,
    pub rate_current: RateCurrent,
}

impl Default for TransientConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 15.0,
            i_floor: 0.1,
            rate_current: RateCurrent::InputOrState,
        }
    }
}

/// Sampled waveforms of a transient run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientTrace {
    pub time_us: Vec<f64>,
    pub layer_sizes: Vec<usize>,
    /// Neuron output currents (nA), one row of `neuron_count` per time step.
    pub currents_na: Vec<f64>,
    pub supply_ua: Vec<f64>,
    /// Time of the last input switch, µs.
    pub last_switch_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeToOutput {
    Converged(f64),
    Unconverged,
}

impl TimeToOutput {
    pub fn value(&self) -> Option<f64> {
        match self {
            TimeToOutput::Converged(t) => Some(*t),
            TimeToOutput::Unconverged => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub joules: f64,
    pub joules_per_op: f64,
}

impl TransientTrace {
    pub fn len(&self) -> usize {
        self.time_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_us.is_empty()
    }

    fn width(&self) -> usize {
        self.layer_sizes.iter().sum()
    }

    /// All neuron currents at step `i`, input layer first.
    pub fn currents(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.currents_na[i * w..(i + 1) * w]
    }

    pub fn layer(&self, i: usize, layer: usize) -> &[f64] {
        let start: usize = self.layer_sizes[..layer].iter().sum();
        &self.currents(i)[start..start + self.layer_sizes[layer]]
    }

    pub fn output(&self, i: usize) -> &[f64] {
        self.layer(i, self.layer_sizes.len() - 1)
    }

    /// Writes `time_us,supply_ua,n{layer}_{index}...` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time_us".to_string(), "supply_ua".to_string()];
        for (k, &n) in self.layer_sizes.iter().enumerate() {
            header.extend((0..n).map(|i| format!("n{k}_{i}")));
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.time_us[i].to_string(), self.supply_ua[i].to_string()];
            row.extend(self.currents(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Layer {
    rows: usize,
    cols: usize,
    /// Signed weights with the source neuron's negative gain folded in.
    signed: Vec<f64>,
    /// Positive weights only, for the supply current.
    positive: Vec<f64>,
}

fn matvec(rows: usize, cols: usize, m: &[f64], x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate().take(rows) {
        let row = &m[i * cols..(i + 1) * cols];
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// Simulates the device with `codes` programmed while the input follows
/// `schedule`, a list of `(switch time µs, input nA)` pairs. The state starts
/// at the DC solution of the first input.
///
/// Each neuron relaxes toward the target set by the present currents of the
/// layer below, `y ← ŷ + (y − ŷ)·exp(−dt/τ)` with
/// `τ = nU_T·C / max(I, I_floor)` and `C` = capacitance per synapse × fan-out.
pub fn transient(
    device: &VirtualDevice,
    codes: &WeightMatrix,
    schedule: &[(f64, Vec<f64>)],
    config: &TransientConfig,
) -> Result<TransientTrace> {
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(Error::Parameter(format!("dt = {} must be positive", config.dt)));
    }
    if !(config.t_end >= 0.0 && config.i_floor > 0.0) {
        return Err(Error::Parameter("t_end must be ≥ 0 and I_floor > 0".into()));
    }
    if schedule.is_empty() {
        return Err(Error::Parameter("empty input schedule".into()));
    }
    if schedule.windows(2).any(|w| !(w[1].0 > w[0].0)) || schedule[0].0 < 0.0 {
        return Err(Error::Parameter("schedule times must be increasing and ≥ 0".into()));
    }

    let topo = &device.topology;
    let sizes = topo.layer_sizes().to_vec();
    let n_layers = sizes.len();
    let profile = device.effective_profile();
    let weights = device.synapse_weights(codes)?;
    let layers: Vec<Layer> = weights
        .layers
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let g = &profile.neg_gains[k];
            let signed = m
                .data
                .iter()
                .enumerate()
                .map(|(idx, &w)| if w < 0.0 { g[idx % m.cols] * w } else { w })
                .collect();
            let positive = m.data.iter().map(|&w| w.max(0.0)).collect();
            Layer {
                rows: m.rows,
                cols: m.cols,
                signed,
                positive,
            }
        })
        .collect();

    // nU_T·C in mV·fF; divided by nA this gives ns, hence the 1e-3.
    let n_ut = device.params.n_ut();
    let tau_num: Vec<f64> = (0..n_layers)
        .map(|k| {
            let fan_out = if k + 1 < n_layers { sizes[k + 1] } else { 1 };
            n_ut * device.capacitance_ff * fan_out as f64 * 1e-3
        })
        .collect();

    let mut state = device.dc_response(codes, &schedule[0].1)?;
    let mut net: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    let mut scratch: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();

    let n_steps = (config.t_end / config.dt).round() as usize;
    let width: usize = sizes.iter().sum();
    let mut trace = TransientTrace {
        time_us: Vec::with_capacity(n_steps + 1),
        layer_sizes: sizes.clone(),
        currents_na: Vec::with_capacity((n_steps + 1) * width),
        supply_ua: Vec::with_capacity(n_steps + 1),
        last_switch_us: 0.0,
    };

    let mut next = 1;
    let mut input = &schedule[0].1;
    for step in 0..=n_steps {
        let t = step as f64 * config.dt;
        while next < schedule.len() && schedule[next].0 <= t + 1e-9 * config.dt {
            input = &schedule[next].1;
            trace.last_switch_us = schedule[next].0;
            next += 1;
        }
        if input.len() != sizes[0] {
            return Err(Error::Shape(format!(
                "input has {} entries, device expects {}",
                input.len(),
                sizes[0]
            )));
        }

        // Soma input currents from the present upstream state.
        net[0].copy_from_slice(input);
        for (k, l) in layers.iter().enumerate() {
            matvec(l.rows, l.cols, &l.signed, &state[k], &mut net[k + 1]);
        }
        record(&mut trace, t, &state, &net, &layers, &profile.neg_gains);
        if step == n_steps {
            break;
        }

        for k in 0..n_layers {
            let a = &profile.slopes[k];
            for i in 0..sizes[k] {
                let drive = net[k][i].max(0.0);
                let target = a[i] * drive;
                let y = state[k][i];
                let rate = match config.rate_current {
                    RateCurrent::Input => drive,
                    RateCurrent::InputOrState => drive.max(y / a[i]),
                }
                .max(config.i_floor);
                let tau = tau_num[k] / rate;
                scratch[k][i] = target + (y - target) * (-config.dt / tau).exp();
            }
        }
        std::mem::swap(&mut state, &mut scratch);
    }
    if !(trace.last_switch_us <= config.t_end) {
        trace.last_switch_us = config.t_end;
    }
    Ok(trace)
}

fn record(
    trace: &mut TransientTrace,
    t: f64,
    state: &[Vec<f64>],
    net: &[Vec<f64>],
    layers: &[Layer],
    neg_gains: &[Vec<f64>],
) {
    trace.time_us.push(t);
    for layer in state {
        trace.currents_na.extend_from_slice(layer);
    }
    trace.supply_ua.push(supply_current(state, net, layers, neg_gains) * 1e-3);
}

/// Total current drawn from the supply, nA: input sources, the two mirror
/// branches of every soma, every positive synapse branch and the output
/// readout of the last layer.
fn supply_current(state: &[Vec<f64>], net: &[Vec<f64>], layers: &[Layer], neg_gains: &[Vec<f64>]) -> f64 {
    let mut total: f64 = net[0].iter().map(|v| v.max(0.0)).sum();
    for (y, g) in state.iter().zip(neg_gains) {
        total += y.iter().zip(g).map(|(y, g)| y * (1.0 + g)).sum::<f64>();
    }
    for (k, l) in layers.iter().enumerate() {
        let x = &state[k];
        for i in 0..l.rows {
            let row = &l.positive[i * l.cols..(i + 1) * l.cols];
            total += row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
    }
    total + state.last().map_or(0.0, |y| y.iter().sum())
}

/// Earliest time after the last input switch from which the output argmax
/// stays at `asymptotic` for the rest of the trace.
pub fn time_to_output(trace: &TransientTrace, asymptotic: usize) -> Result<TimeToOutput> {
    if trace.is_empty() {
        return Err(Error::Parameter("empty trace".into()));
    }
    let start = trace
        .time_us
        .iter()
        .position(|&t| t >= trace.last_switch_us - 1e-12)
        .unwrap_or(trace.len() - 1);
    let mut settled = None;
    for i in (start..trace.len()).rev() {
        if argmax(trace.output(i)) != asymptotic {
            break;
        }
        settled = Some(i);
    }
    Ok(match settled {
        Some(i) => TimeToOutput::Converged(trace.time_us[i] - trace.last_switch_us),
        None => TimeToOutput::Unconverged,
    })
}

/// Supply energy over `window` (µs), by trapezoidal integration of the
/// supply current; per-op energy divides by the synapse count.
pub fn energy(device: &VirtualDevice, trace: &TransientTrace, window: (f64, f64)) -> Result<Energy> {
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(Error::Parameter(format!("empty energy window [{t0}, {t1}]")));
    }
    let (first, last) = match (trace.time_us.first(), trace.time_us.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::Parameter("empty trace".into())),
    };
    let tol = 1e-9 * (last - first).abs().max(1.0);
    if t0 < first - tol || t1 > last + tol {
        return Err(Error::Parameter(format!(
            "window [{t0}, {t1}] outside trace [{first}, {last}]"
        )));
    }
    let at = |t: f64| -> f64 {
        let ts = &trace.time_us;
        let j = ts.partition_point(|&x| x <= t);
        if j == 0 {
            return trace.supply_ua[0];
        }
        if j >= ts.len() {
            return trace.supply_ua[ts.len() - 1];
        }
        let f = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
        trace.supply_ua[j - 1] + f * (trace.supply_ua[j] - trace.supply_ua[j - 1])
    };
    let mut points = vec![(t0, at(t0))];
    for (t, i) in trace.time_us.iter().zip(&trace.supply_ua) {
        if *t > t0 && *t < t1 {
            points.push((*t, *i));
        }
    }
    points.push((t1, at(t1)));
    let ua_us: f64 = points.windows(2).map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0)).sum();
    // µA·µs = 1e-12 C
    let joules = VDD * ua_us * 1e-12;
    Ok(Energy {
        joules,
        joules_per_op: joules / device.topology.synapse_count() as f64,
    })
}
