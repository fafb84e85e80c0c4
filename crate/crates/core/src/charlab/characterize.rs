use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dut::DeviceUnderTest;
use super::fit::fit_slopes;
use super::negative::estimate_negative_gains;
use super::plan::plan_measurements;
use super::protocol::{run_protocol, MeasurementRecord};
use crate::error::{Error, Result};
use crate::netcore::TransferProfile;
use crate::provenance::content_hash;

pub const PROFILE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizeOptions {
    pub n_configs: usize,
    /// Input drive levels, nA; cycled across configurations.
    pub levels: Vec<f64>,
    pub seed: u64,
    /// Drive used while estimating negative gains, nA.
    pub negative_level: f64,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        Self {
            n_configs: 40,
            levels: vec![5.0, 10.0, 15.0, 20.0],
            seed: 0,
            negative_level: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub min_points: usize,
    pub mean_residual_rms_na: f64,
    pub dead: Vec<(usize, usize)>,
    pub unmeasured_negative: Vec<(usize, usize)>,
}

/// A measured profile together with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub schema: u32,
    pub profile: TransferProfile,
    #[serde(default)]
    pub device_hash: Option<String>,
    pub options: CharacterizeOptions,
    pub stats: FitStats,
}

impl ProfileFile {
    pub fn hash(&self) -> Result<String> {
        content_hash(&self.profile)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let p: ProfileFile = serde_json::from_slice(&fs::read(path)?)?;
        if p.schema != PROFILE_SCHEMA {
            return Err(Error::Format {
                path: path.to_path_buf(),
                offset: 0,
                reason: format!("unsupported profile schema {}", p.schema),
            });
        }
        p.profile.validate(&p.profile.topology()?)?;
        Ok(p)
    }
}

/// Plans, measures and fits slopes, then estimates negative gains.
pub fn characterize<D: DeviceUnderTest + ?Sized>(
    dut: &mut D,
    options: &CharacterizeOptions,
    device_hash: Option<String>,
) -> Result<(ProfileFile, Vec<MeasurementRecord>)> {
    let topo = dut.topology().clone();
    let plan = plan_measurements(&topo, options.n_configs, &options.levels, options.seed)?;
    let records = run_protocol(dut, &plan)?;
    let fit = fit_slopes(&topo, &records)?;
    let neg = estimate_negative_gains(dut, options.negative_level, options.seed)?;
    let n_neurons = topo.neuron_count() as f64;
    let stats = FitStats {
        min_points: fit.points.iter().flatten().copied().min().unwrap_or(0),
        mean_residual_rms_na: fit.residual_rms.iter().flatten().sum::<f64>() / n_neurons,
        dead: fit.dead.clone(),
        unmeasured_negative: neg.flagged,
    };
    let profile = TransferProfile {
        slopes: fit.normalized,
        neg_gains: neg.gains,
    };
    profile.validate(&topo)?;
    Ok((
        ProfileFile {
            schema: PROFILE_SCHEMA,
            profile,
            device_hash,
            options: options.clone(),
            stats,
        },
        records,
    ))
}
