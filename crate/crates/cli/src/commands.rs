use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::warn;
use serde::Serialize;

use heteronet::bench::{
    benchmark_dynamics, evaluate_device, write_records_csv, Aggregates, BenchReport, DynamicsConfig,
};
use heteronet::charlab::{self, write_measurement_log, CharacterizeOptions, ProfileFile};
use heteronet::datasets::{prepare, DataRecipe, Prepared};
use heteronet::netcore::Topology;
use heteronet::trainer::{self, Hyperparams, TrainedModel};
use heteronet::vdevice::{GeometryTable, MismatchParams, RateCurrent, SigmaRule, VirtualDevice};
use heteronet::Error;

use crate::{
    BenchArgs, CharacterizeArgs, DataArgs, DatasetArg, EvalArgs, FabricateArgs, ProgramArgs, ProvenanceArgs,
    RateArg, ReportArgs, SigmaRuleArg, TrainArgs,
};

const BUNDLED_IRIS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/iris.csv");

#[derive(Debug)]
pub struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn echo<T: Serialize>(command: &str, config: &T) -> Result<()> {
    println!("{command} config: {}", serde_json::to_string(config)?);
    Ok(())
}

fn parse_topology(s: &str) -> Result<Topology> {
    s.parse::<Topology>()
        .map_err(|e| UsageError(format!("bad topology {s:?}: {e}")).into())
}

fn cv(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    var.sqrt() / m
}

pub fn fabricate(a: &FabricateArgs) -> Result<()> {
    echo("fabricate", a)?;
    let topology = parse_topology(&a.topology)?;
    let params = MismatchParams {
        a_vt: a.avt,
        sigma_rule: match a.sigma_rule {
            SigmaRuleArg::WidthOverLength => SigmaRule::WidthOverLength,
            SigmaRuleArg::Pelgrom => SigmaRule::Pelgrom,
        },
        ..Default::default()
    };
    let mut dev = VirtualDevice::fabricate(&topology, a.seed, &params, &GeometryTable::default())?
        .with_capacitance(a.capacitance)?;
    if a.synapse_mismatch {
        dev = dev.with_synapse_mismatch()?;
    }
    dev.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let profile = dev.effective_profile();
    println!(
        "device {} with {} neurons, hash {}",
        topology,
        topology.neuron_count(),
        heteronet::provenance::short(&dev.hash()?)
    );
    println!(
        "slope CV {:.4}, negative-gain CV {:.4}",
        cv(&profile.slopes.concat()),
        cv(&profile.neg_gains.concat())
    );
    Ok(())
}

pub fn characterize(a: &CharacterizeArgs) -> Result<()> {
    echo("characterize", a)?;
    let mut dev = VirtualDevice::load(&a.device).with_context(|| format!("reading {}", a.device.display()))?;
    let options = CharacterizeOptions {
        n_configs: a.configs,
        levels: a.levels.clone(),
        seed: a.seed,
        negative_level: a.negative_level,
    };
    let hash = dev.hash()?;
    let (file, records) = charlab::characterize(&mut dev, &options, Some(hash))?;
    file.save(&a.out)?;
    if let Some(log) = &a.log {
        write_measurement_log(log, &records)?;
    }
    let slopes = file.profile.slopes.concat();
    println!(
        "{} configurations, at least {} points per neuron, mean residual {:.3e} nA",
        records.len(),
        file.stats.min_points,
        file.stats.mean_residual_rms_na
    );
    println!(
        "normalized slopes in [{:.4}, {:.4}], {} dead, {} negative gains unmeasured",
        slopes.iter().cloned().fold(f64::INFINITY, f64::min),
        slopes.iter().cloned().fold(0.0, f64::max),
        file.stats.dead.len(),
        file.stats.unmeasured_negative.len()
    );
    println!("profile hash {}", heteronet::provenance::short(&file.hash()?));
    Ok(())
}

fn recipe(d: &DataArgs) -> DataRecipe {
    match d.dataset {
        DatasetArg::Mnist => DataRecipe::mnist(),
        DatasetArg::Iris => DataRecipe::iris(d.split_seed),
    }
}

fn data_source(d: &DataArgs) -> Result<PathBuf> {
    if let Some(p) = &d.data {
        return Ok(p.clone());
    }
    match d.dataset {
        DatasetArg::Iris => Ok(PathBuf::from(BUNDLED_IRIS)),
        DatasetArg::Mnist => std::env::var_os("MNIST_DIR")
            .map(PathBuf::from)
            .ok_or_else(|| UsageError("MNIST needs --data DIR or MNIST_DIR".into()).into()),
    }
}

fn load_data(d: &DataArgs, topology: &Topology) -> Result<(DataRecipe, Prepared)> {
    let r = recipe(d);
    let source = data_source(d)?;
    let prepared = prepare(&r, &source).with_context(|| format!("preparing {}", source.display()))?;
    if prepared.train.dim() != topology.input_size() {
        return Err(UsageError(format!(
            "dataset has {} inputs, topology {topology} expects {}",
            prepared.train.dim(),
            topology.input_size()
        ))
        .into());
    }
    Ok((r, prepared))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let profile = ProfileFile::load(&a.profile).with_context(|| format!("reading {}", a.profile.display()))?;
    let topology = profile.profile.topology()?;
    let mut hp = match a.data.dataset {
        DatasetArg::Mnist => Hyperparams::mnist(),
        DatasetArg::Iris => Hyperparams::iris(),
    };
    hp.seed = a.seed;
    hp.epochs = a.epochs.unwrap_or(hp.epochs);
    hp.batch_size = a.batch_size.unwrap_or(hp.batch_size);
    hp.learning_rate = a.lr.unwrap_or(hp.learning_rate);
    hp.l1_negative = a.l1.unwrap_or(hp.l1_negative);
    hp.restarts = a.restarts.unwrap_or(hp.restarts);
    hp.input_scale = a.input_scale.unwrap_or(hp.input_scale);
    hp.quantize = !a.no_quantize;
    echo("train", &serde_json::json!({ "args": a, "hyperparams": &hp }))?;

    let (recipe, data) = load_data(&a.data, &topology)?;
    let mut model = trainer::train(&data.train, Some(&data.test), &profile.profile, &hp)?;
    model.data_recipe = Some(recipe);
    model.save(&a.out)?;
    if let Some(log) = &a.log {
        model.write_log_csv(log)?;
    }
    if let Some(m) = model.metrics.last() {
        println!(
            "epoch {}: loss {:.5}, train accuracy {:.4}, test accuracy {}",
            m.epoch,
            m.train_loss,
            m.train_acc,
            m.test_acc.map_or("-".into(), |t| format!("{t:.4}"))
        );
    }
    println!(
        "model hash {}, {} negative synapses",
        heteronet::provenance::short(&model.hash()?),
        model.codes.negative_count()
    );
    Ok(())
}

/// Checks device → profile → model. Mismatches are errors unless forced.
fn check_chain(dev: &VirtualDevice, model: &TrainedModel, p: &ProvenanceArgs) -> Result<()> {
    let mut problems = Vec::new();
    if model.topology != dev.topology {
        return Err(Error::Shape(format!("model is {}, device is {}", model.topology, dev.topology)).into());
    }
    match &p.profile {
        Some(path) => {
            let profile = ProfileFile::load(path).with_context(|| format!("reading {}", path.display()))?;
            let dev_hash = dev.hash()?;
            if profile.device_hash.as_deref() != Some(dev_hash.as_str()) {
                problems.push(format!(
                    "profile {} was measured on device {}, not on this device {}",
                    path.display(),
                    profile.device_hash.as_deref().map_or("(unknown)", heteronet::provenance::short),
                    heteronet::provenance::short(&dev_hash)
                ));
            }
            if profile.hash()? != model.profile_hash {
                problems.push(format!(
                    "model was trained on profile {}, not on {} ({})",
                    heteronet::provenance::short(&model.profile_hash),
                    path.display(),
                    heteronet::provenance::short(&profile.hash()?)
                ));
            }
        }
        None => warn!("no --profile given; the device → profile → model chain is not verified"),
    }
    if problems.is_empty() {
        return Ok(());
    }
    if p.force {
        for msg in &problems {
            warn!("{msg} (continuing because of --force)");
        }
        return Ok(());
    }
    Err(Error::Provenance(problems.join("; ")).into())
}

pub fn program(a: &ProgramArgs) -> Result<()> {
    echo("program", a)?;
    let mut dev = VirtualDevice::load(&a.device).with_context(|| format!("reading {}", a.device.display()))?;
    let model = TrainedModel::load(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    check_chain(&dev, &model, &a.provenance)?;
    dev.programmed = Some(model.codes.clone());
    dev.save(&a.device)?;
    println!(
        "programmed {} synapses into {}",
        model.topology.synapse_count(),
        a.device.display()
    );
    Ok(())
}

/// Loads device and model, verifies them, and makes sure the device holds
/// the model's codes.
fn programmed_pair(device: &Path, model: &Path, p: &ProvenanceArgs) -> Result<(VirtualDevice, TrainedModel)> {
    let mut dev = VirtualDevice::load(device).with_context(|| format!("reading {}", device.display()))?;
    let model = TrainedModel::load(model).with_context(|| format!("reading {}", model.display()))?;
    check_chain(&dev, &model, p)?;
    match &dev.programmed {
        Some(codes) if codes != &model.codes => {
            let msg = "device holds different codes than the model; run `program` first";
            if !p.force {
                return Err(Error::Provenance(msg.into()).into());
            }
            warn!("{msg} (using the model's codes because of --force)");
        }
        None => warn!("device was never programmed; using the model's codes"),
        _ => {}
    }
    dev.programmed = Some(model.codes.clone());
    Ok((dev, model))
}

#[derive(Serialize)]
struct EvalSummary {
    samples: usize,
    correct: usize,
    accuracy: f64,
    failure: Option<(usize, String)>,
    model_hash: String,
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    echo("eval", a)?;
    let (mut dev, model) = programmed_pair(&a.device, &a.model, &a.provenance)?;
    let (_, data) = load_data(&a.data, &dev.topology)?;
    let n = a.samples.min(data.test.len());
    let codes = model.codes.clone();
    let report = evaluate_device(&mut dev, &codes, &data.test, n)?;
    let summary = EvalSummary {
        samples: report.evaluated(),
        correct: report.correct,
        accuracy: report.accuracy(),
        failure: report.failure.clone(),
        model_hash: model.hash()?,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    println!("accuracy {}/{} = {:.4}", report.correct, report.evaluated(), report.accuracy());
    if let Some((i, msg)) = report.failure {
        return Err(Error::Measurement { config: i, reason: msg }.into());
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    echo("bench", a)?;
    let (dev, model) = programmed_pair(&a.device, &a.model, &a.provenance)?;
    let (_, data) = load_data(&a.data, &dev.topology)?;
    let config = DynamicsConfig {
        horizon_us: a.horizon,
        dt_us: a.dt,
        i_floor_na: a.i_floor,
        rate_current: match a.rate_current {
            RateArg::Input => RateCurrent::Input,
            RateArg::InputOrState => RateCurrent::InputOrState,
        },
    };
    let n = a.samples.min(data.test.len());
    let model_hash = model.hash()?;
    for mut r in benchmark_dynamics(&dev, &model.codes, &data.test, n, &a.drives, &config)? {
        r.model_hash = Some(model_hash.clone());
        let tag = format!("_{}nA", r.drive_na);
        let json = with_suffix(&a.out, &format!("{tag}.json"));
        let csv = with_suffix(&a.out, &format!("{tag}.csv"));
        r.save_json(&json)?;
        write_records_csv(&csv, &r.records)?;
        print_aggregates(&r);
        println!("wrote {} and {}", json.display(), csv.display());
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("-".into(), |x| format!("{x:.digits$}"))
}

fn print_aggregates(r: &BenchReport) {
    let g = &r.aggregates;
    println!(
        "{} nA: accuracy {:.4}, converged {}/{}, time to output {} ± {} µs",
        r.drive_na,
        g.accuracy,
        g.converged,
        g.n,
        fmt_opt(g.mean_tto_us, 3),
        fmt_opt(g.std_tto_us, 3)
    );
    println!(
        "  energy/op to output {} pJ ({} op/J), over {} µs window {} pJ",
        fmt_opt(g.mean_energy_per_op_pj, 5),
        g.ops_per_joule.map_or("-".into(), |x| format!("{x:.3e}")),
        r.config.horizon_us,
        fmt_opt(g.mean_window_energy_per_op_pj, 5)
    );
}

pub fn report(a: &ReportArgs) -> Result<()> {
    echo("report", a)?;
    let r = BenchReport::load_json(&a.report).with_context(|| format!("reading {}", a.report.display()))?;
    if Aggregates::from_records(&r.records) != r.aggregates {
        return Err(Error::Format {
            path: a.report.clone(),
            offset: 0,
            reason: "aggregates do not match the per-sample records".into(),
        }
        .into());
    }
    if let Some(path) = &a.model {
        let model = TrainedModel::load(path)?;
        if r.model_hash.as_deref() != Some(model.hash()?.as_str()) {
            return Err(Error::Provenance(format!("report was not produced by model {}", path.display())).into());
        }
    }
    if let Some(path) = &a.device {
        let dev = VirtualDevice::load(path)?;
        if r.device_hash != dev.hash()? {
            return Err(Error::Provenance(format!("report was not produced on device {}", path.display())).into());
        }
    }
    print_aggregates(&r);
    if let Some(csv) = &a.csv {
        write_records_csv(csv, &r.records)?;
        println!("wrote {}", csv.display());
    }
    Ok(())
}
