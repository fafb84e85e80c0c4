use log::warn;
use serde::{Deserialize, Serialize};

use crate::charlab::DeviceUnderTest;
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::netcore::{argmax, Topology, TransferProfile, WeightMatrix};
use crate::trainer::predict;

/// Classification outcome over the first `n` samples of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub requested: usize,
    pub predictions: Vec<usize>,
    pub correct: usize,
    /// Index and message of the sample at which the device failed, if any.
    pub failure: Option<(usize, String)>,
}

impl AccuracyReport {
    pub fn evaluated(&self) -> usize {
        self.predictions.len()
    }

    /// Fraction correct among the evaluated samples.
    pub fn accuracy(&self) -> f64 {
        if self.predictions.is_empty() {
            0.0
        } else {
            self.correct as f64 / self.predictions.len() as f64
        }
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none() && self.evaluated() == self.requested
    }
}

fn check_count(dataset: &Dataset, n: usize) -> Result<()> {
    if n > dataset.len() {
        return Err(Error::Parameter(format!(
            "{n} samples requested, dataset has {}",
            dataset.len()
        )));
    }
    Ok(())
}

/// Programs `codes` once, then applies each sample and takes the argmax of
/// the output currents. A device error stops the run and is returned in the
/// report together with what was measured so far.
pub fn evaluate_device<D: DeviceUnderTest + ?Sized>(
    dut: &mut D,
    codes: &WeightMatrix,
    dataset: &Dataset,
    n: usize,
) -> Result<AccuracyReport> {
    check_count(dataset, n)?;
    dut.program(codes)?;
    let mut report = AccuracyReport {
        requested: n,
        predictions: Vec::with_capacity(n),
        correct: 0,
        failure: None,
    };
    for i in 0..n {
        match dut.apply_input(dataset.input(i)) {
            Ok(r) => {
                let p = argmax(&r.outputs);
                report.correct += (p == dataset.label(i)) as usize;
                report.predictions.push(p);
            }
            Err(e) => {
                warn!("device failed at sample {i}: {e}");
                report.failure = Some((i, e.to_string()));
                break;
            }
        }
    }
    Ok(report)
}

/// Same evaluation through the behavioral model.
pub fn evaluate_model(
    topology: &Topology,
    profile: &TransferProfile,
    codes: &WeightMatrix,
    dataset: &Dataset,
    n: usize,
) -> Result<AccuracyReport> {
    check_count(dataset, n)?;
    let head = dataset.head(n);
    let predictions = predict(topology, profile, &codes.effective(), &head, 1.0)?;
    let correct = predictions.iter().zip(head.labels()).filter(|(p, l)| p == l).count();
    Ok(AccuracyReport {
        requested: n,
        predictions,
        correct,
        failure: None,
    })
}
