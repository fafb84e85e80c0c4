use serde::{Deserialize, Serialize};

use super::report::{Aggregates, BenchReport, SampleRecord, REPORT_SCHEMA};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::netcore::{argmax, WeightMatrix};
use crate::vdevice::{energy, time_to_output, transient, RateCurrent, TimeToOutput, TransientConfig, VirtualDevice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// Simulated time after each input switch, µs.
    pub horizon_us: f64,
    pub dt_us: f64,
    pub i_floor_na: f64,
    pub rate_current: RateCurrent,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        let t = TransientConfig::default();
        Self {
            horizon_us: 15.0,
            dt_us: t.dt,
            i_floor_na: t.i_floor,
            rate_current: t.rate_current,
        }
    }
}

/// Mean input current per input neuron over the first `n` samples, nA.
pub fn mean_drive(dataset: &Dataset, n: usize) -> f64 {
    let d = dataset.head(n);
    let v = d.inputs();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Times and energies of pattern transitions.
///
/// For every drive level the inputs are rescaled to that mean current. Each
/// sample is switched in after its predecessor in the dataset has settled
/// (the first sample starts from rest), and the horizon is simulated. Energy
/// is integrated both up to the time to output and over the whole horizon.
pub fn benchmark_dynamics(
    device: &VirtualDevice,
    codes: &WeightMatrix,
    dataset: &Dataset,
    n_samples: usize,
    drives_na: &[f64],
    config: &DynamicsConfig,
) -> Result<Vec<BenchReport>> {
    if n_samples == 0 || n_samples > dataset.len() {
        return Err(Error::Parameter(format!(
            "cannot benchmark {n_samples} of {} samples",
            dataset.len()
        )));
    }
    if !(config.horizon_us > 0.0 && config.dt_us > 0.0) {
        return Err(Error::Parameter("horizon and dt must be positive".into()));
    }
    let base = mean_drive(dataset, n_samples);
    if !(base > 0.0) {
        return Err(Error::Parameter("dataset carries no input current".into()));
    }
    let tcfg = TransientConfig {
        dt: config.dt_us,
        t_end: config.dt_us + config.horizon_us,
        i_floor: config.i_floor_na,
        rate_current: config.rate_current,
    };
    let switch = config.dt_us;
    let ops = device.topology.synapse_count() as f64;
    let device_hash = device.hash()?;

    let mut reports = Vec::with_capacity(drives_na.len());
    for &drive in drives_na {
        if !(drive > 0.0 && drive.is_finite()) {
            return Err(Error::Parameter(format!("drive {drive} nA must be positive")));
        }
        let scale = drive / base;
        let scaled = |i: usize| -> Vec<f64> { dataset.input(i).iter().map(|v| v * scale).collect() };
        let mut records = Vec::with_capacity(n_samples);
        for i in 0..n_samples {
            let prev = if i == 0 { vec![0.0; dataset.dim()] } else { scaled(i - 1) };
            let cur = scaled(i);
            let trace = transient(device, codes, &[(0.0, prev), (switch, cur.clone())], &tcfg)?;
            let dc = device.dc_response(codes, &cur)?;
            let asymptotic = argmax(dc.last().expect("at least two layers"));
            let end = argmax(trace.output(trace.len() - 1));
            let tto = time_to_output(&trace, asymptotic)?;
            let fixed = energy(device, &trace, (switch, switch + config.horizon_us))?;
            let (tto_us, stop_early) = match tto {
                TimeToOutput::Converged(t) if t > 0.0 => {
                    (Some(t), Some(energy(device, &trace, (switch, switch + t))?.joules))
                }
                TimeToOutput::Converged(t) => (Some(t), Some(0.0)),
                TimeToOutput::Unconverged => (None, None),
            };
            records.push(SampleRecord {
                sample_id: i,
                correct: end == dataset.label(i),
                tto_us,
                energy_pj: stop_early.map(|j| j * 1e12),
                energy_per_op_pj: stop_early.map(|j| j * 1e12 / ops),
                window_energy_pj: fixed.joules * 1e12,
                window_energy_per_op_pj: fixed.joules_per_op * 1e12,
            });
        }
        let aggregates = Aggregates::from_records(&records);
        reports.push(BenchReport {
            schema: REPORT_SCHEMA,
            drive_na: drive,
            input_scale: scale,
            config: config.clone(),
            synapse_count: device.topology.synapse_count(),
            device_hash: device_hash.clone(),
            model_hash: None,
            records,
            aggregates,
        });
    }
    Ok(reports)
}
