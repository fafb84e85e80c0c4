use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dut::DeviceUnderTest;
use super::plan::MeasurementPlan;
use crate::error::{Error, Result};

/// Input and output current of one neuron in one configuration, nA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub layer: usize,
    pub neuron: usize,
    pub input: f64,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub config: usize,
    pub level: f64,
    pub sources: Vec<Vec<usize>>,
    /// False when the drive was zero and the readings carry no slope
    /// information.
    pub usable: bool,
    pub readings: Vec<Reading>,
}

/// Programs each configuration of `plan`, drives it, and pairs every probed
/// neuron's input current with the current it delivers downstream. Output
/// neurons are read directly.
pub fn run_protocol<D: DeviceUnderTest + ?Sized>(
    dut: &mut D,
    plan: &MeasurementPlan,
) -> Result<Vec<MeasurementRecord>> {
    if dut.topology() != &plan.topology {
        return Err(Error::Shape(format!(
            "plan is for {}, device is {}",
            plan.topology,
            dut.topology()
        )));
    }
    let topo = plan.topology.clone();
    let n_layers = topo.n_layers();
    let mut records = Vec::with_capacity(plan.configs.len());
    for c in &plan.configs {
        let fail = |reason: String| Error::Measurement { config: c.id, reason };
        dut.program(&c.codes(&topo)).map_err(|e| fail(e.to_string()))?;
        let input = vec![c.level; topo.input_size()];
        let r = dut.apply_input(&input).map_err(|e| fail(e.to_string()))?;
        if r.soma_inputs.len() != n_layers || r.outputs.len() != topo.output_size() {
            return Err(fail("readout does not match topology".into()));
        }
        if let Some(v) = r
            .soma_inputs
            .iter()
            .flatten()
            .chain(&r.outputs)
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(fail(format!("invalid current reading {v}")));
        }

        let mut readings = Vec::new();
        for k in 0..n_layers {
            for j in 0..topo.layer_size(k) {
                let output = if k + 1 == n_layers {
                    r.outputs[j]
                } else {
                    let fed: Vec<f64> = c.sources[k]
                        .iter()
                        .enumerate()
                        .filter(|(_, &s)| s == j)
                        .map(|(i, _)| r.soma_inputs[k + 1][i])
                        .collect();
                    if fed.is_empty() {
                        continue;
                    }
                    fed.iter().sum::<f64>() / fed.len() as f64
                };
                readings.push(Reading {
                    layer: k,
                    neuron: j,
                    input: r.soma_inputs[k][j],
                    output,
                });
            }
        }
        records.push(MeasurementRecord {
            config: c.id,
            level: c.level,
            sources: c.sources.clone(),
            usable: c.level > 0.0,
            readings,
        });
    }
    Ok(records)
}

/// One JSON object per line.
pub fn write_measurement_log(path: &Path, records: &[MeasurementRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_measurement_log(path: &Path) -> Result<Vec<MeasurementRecord>> {
    let mut records = Vec::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(records)
}
