use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

/// Exit status classes.
const EXIT_USAGE: u8 = 2;
const EXIT_FORMAT: u8 = 3;
const EXIT_PROVENANCE: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "heteronet", version, about = "Mismatch-aware analog network toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create a mismatched virtual device
    Fabricate(FabricateArgs),
    /// Measure a device's transfer profile
    Characterize(CharacterizeArgs),
    /// Train 3-bit weights through a measured profile
    Train(TrainArgs),
    /// Write a model's codes into a device file
    Program(ProgramArgs),
    /// Classification accuracy of a programmed device
    Eval(EvalArgs),
    /// Settling time and energy of pattern transitions
    Bench(BenchArgs),
    /// Summarize a benchmark report
    Report(ReportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SigmaRuleArg {
    WidthOverLength,
    Pelgrom,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum RateArg {
    Input,
    InputOrState,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DatasetArg {
    Mnist,
    Iris,
}

#[derive(Args, Debug, Serialize)]
struct FabricateArgs {
    #[arg(long)]
    topology: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Threshold mismatch coefficient, mV·µm
    #[arg(long, default_value_t = 3.3)]
    avt: f64,
    #[arg(long, value_enum, default_value_t = SigmaRuleArg::WidthOverLength)]
    sigma_rule: SigmaRuleArg,
    /// Parasitic capacitance per synapse, fF
    #[arg(long, default_value_t = 11.0)]
    capacitance: f64,
    #[arg(long)]
    synapse_mismatch: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CharacterizeArgs {
    #[arg(long)]
    device: PathBuf,
    #[arg(long, default_value_t = 40)]
    configs: usize,
    /// Input drive levels, nA
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drive for negative-gain estimation, nA
    #[arg(long, default_value_t = 15.0)]
    negative_level: f64,
    #[arg(long, short)]
    out: PathBuf,
    /// JSON-lines measurement log
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DataArgs {
    #[arg(long, value_enum)]
    dataset: DatasetArg,
    /// MNIST directory or Iris CSV file
    #[arg(long)]
    data: Option<PathBuf>,
    /// Iris train/test split seed
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long)]
    profile: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    l1: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Factor from input currents (nA) to network units
    #[arg(long)]
    input_scale: Option<f64>,
    /// Train with full-precision weights (codes are rounded at export)
    #[arg(long)]
    no_quantize: bool,
    #[arg(long, short)]
    out: PathBuf,
    /// Per-epoch CSV log
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ProvenanceArgs {
    /// Profile the model was trained on, to verify the chain device → profile → model
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Proceed despite provenance mismatches
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug, Serialize)]
struct ProgramArgs {
    #[arg(long)]
    device: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    provenance: ProvenanceArgs,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[arg(long)]
    device: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    provenance: ProvenanceArgs,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 500)]
    samples: usize,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    #[arg(long)]
    device: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    provenance: ProvenanceArgs,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Mean input current per input neuron, nA
    #[arg(long, value_delimiter = ',', default_value = "15,45")]
    drives: Vec<f64>,
    #[arg(long, default_value_t = 15.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 0.1)]
    i_floor: f64,
    #[arg(long, value_enum, default_value_t = RateArg::InputOrState)]
    rate_current: RateArg,
    /// Output prefix; writes <prefix>_<drive>nA.{json,csv}
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    #[arg(long)]
    report: PathBuf,
    /// Also export the per-sample records as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Model to check the report against
    #[arg(long)]
    model: Option<PathBuf>,
    /// Device to check the report against
    #[arg(long)]
    device: Option<PathBuf>,
}

fn exit_class(err: &anyhow::Error) -> u8 {
    use heteronet::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<heteronet::Error>() {
            return match e {
                E::Provenance(_) => EXIT_PROVENANCE,
                E::Format { .. } | E::Parse { .. } | E::Json(_) | E::Csv(_) => EXIT_FORMAT,
                _ => EXIT_RUNTIME,
            };
        }
        if cause.downcast_ref::<commands::UsageError>().is_some() {
            return EXIT_USAGE;
        }
    }
    EXIT_RUNTIME
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fabricate(a) => commands::fabricate(a),
        Command::Characterize(a) => commands::characterize(a),
        Command::Train(a) => commands::train(a),
        Command::Program(a) => commands::program(a),
        Command::Eval(a) => commands::eval(a),
        Command::Bench(a) => commands::bench(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_class(&e))
        }
    }
}
