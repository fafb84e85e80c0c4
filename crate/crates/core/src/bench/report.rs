use std::fs::{self, File};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dynamics::DynamicsConfig;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA: u32 = 1;

/// One pattern transition. Unconverged samples have no time or
/// stop-early energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: usize,
    pub correct: bool,
    pub tto_us: Option<f64>,
    /// Energy from the switch to the time to output.
    pub energy_pj: Option<f64>,
    pub energy_per_op_pj: Option<f64>,
    /// Energy over the full presentation window.
    pub window_energy_pj: f64,
    pub window_energy_per_op_pj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub n: usize,
    pub accuracy: f64,
    pub converged: usize,
    pub unconverged_rate: f64,
    /// Time and stop-early statistics cover converged samples only and are
    /// absent when there are none.
    pub mean_tto_us: Option<f64>,
    pub std_tto_us: Option<f64>,
    pub mean_energy_per_op_pj: Option<f64>,
    pub std_energy_per_op_pj: Option<f64>,
    pub ops_per_joule: Option<f64>,
    pub mean_window_energy_per_op_pj: Option<f64>,
    pub window_ops_per_joule: Option<f64>,
}

fn mean_std(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (Some(m), Some(var.sqrt()))
}

impl Aggregates {
    pub fn from_records(records: &[SampleRecord]) -> Self {
        let n = records.len();
        let tto: Vec<f64> = records.iter().filter_map(|r| r.tto_us).collect();
        let epo: Vec<f64> = records.iter().filter_map(|r| r.energy_per_op_pj).collect();
        let wepo: Vec<f64> = records.iter().map(|r| r.window_energy_per_op_pj).collect();
        let (mean_tto_us, std_tto_us) = mean_std(&tto);
        let (mean_energy_per_op_pj, std_energy_per_op_pj) = mean_std(&epo);
        let (mean_window_energy_per_op_pj, _) = mean_std(&wepo);
        let denom = n.max(1) as f64;
        Self {
            n,
            accuracy: records.iter().filter(|r| r.correct).count() as f64 / denom,
            converged: tto.len(),
            unconverged_rate: (n - tto.len()) as f64 / denom,
            mean_tto_us,
            std_tto_us,
            mean_energy_per_op_pj,
            std_energy_per_op_pj,
            ops_per_joule: mean_energy_per_op_pj.filter(|e| *e > 0.0).map(|e| 1e12 / e),
            mean_window_energy_per_op_pj,
            window_ops_per_joule: mean_window_energy_per_op_pj.filter(|e| *e > 0.0).map(|e| 1e12 / e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: u32,
    /// Mean input current per input neuron, nA.
    pub drive_na: f64,
    /// Factor applied to the dataset inputs to reach that drive.
    pub input_scale: f64,
    pub config: DynamicsConfig,
    pub synapse_count: usize,
    pub device_hash: String,
    pub model_hash: Option<String>,
    pub records: Vec<SampleRecord>,
    pub aggregates: Aggregates,
}

const CSV_HEADER: [&str; 7] = [
    "sample_id",
    "correct",
    "tto_us",
    "energy_pj",
    "energy_per_op_pj",
    "window_energy_pj",
    "window_energy_per_op_pj",
];

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Per-sample rows; unconverged samples leave the time and stop-early energy
/// fields empty.
pub fn write_records_csv(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.sample_id.to_string(),
            (r.correct as u8).to_string(),
            opt(r.tto_us),
            opt(r.energy_pj),
            opt(r.energy_per_op_pj),
            r.window_energy_pj.to_string(),
            r.window_energy_per_op_pj.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<SampleRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (n, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::Parse {
            path: path.to_path_buf(),
            line: n + 2,
            reason: format!("bad {what}"),
        };
        let num = |i: usize| -> Result<Option<f64>> {
            let s = &row[i];
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(CSV_HEADER[i]))
            }
        };
        out.push(SampleRecord {
            sample_id: row[0].parse().map_err(|_| bad("sample_id"))?,
            correct: match &row[1] {
                "1" => true,
                "0" => false,
                _ => return Err(bad("correct")),
            },
            tto_us: num(2)?,
            energy_pj: num(3)?,
            energy_per_op_pj: num(4)?,
            window_energy_pj: num(5)?.ok_or_else(|| bad("window_energy_pj"))?,
            window_energy_per_op_pj: num(6)?.ok_or_else(|| bad("window_energy_per_op_pj"))?,
        });
    }
    Ok(out)
}

impl BenchReport {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let r: BenchReport = serde_json::from_slice(&fs::read(path)?)?;
        if r.schema != REPORT_SCHEMA {
            return Err(Error::Format {
                path: path.to_path_buf(),
                offset: 0,
                reason: format!("unsupported report schema {}", r.schema),
            });
        }
        Ok(r)
    }
}
