//! Batch command-line front end.
//!
//! Every command writes its artifacts plus a `<command>.manifest` into
//! `--out-dir`. Defaults reproduce the full-size configuration; `--preset
//! desk` shrinks the ensemble to 100 members. Any flag with an `env` entry
//! can also be set through a `BAGSCORE_*` environment variable.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{cmd_compare, cmd_density, cmd_synthetic, cmd_train, DensitySummary};
pub use manifest::RunManifest;

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "bagscore",
    version,
    about = "Density-peak aggregation of bagging ensembles"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Directory for all outputs (created if missing).
    #[arg(long, global = true, default_value = "out", env = "BAGSCORE_OUT_DIR")]
    pub out_dir: PathBuf,

    /// Seed of the train/test split (and of synthetic data generation).
    #[arg(long, global = true, env = "BAGSCORE_SEED")]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Preset::Paper, env = "BAGSCORE_PRESET")]
    pub preset: Preset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 1000 members.
    Paper,
    /// 100 members.
    Desk,
}

impl Preset {
    pub fn n_nets(self) -> usize {
        match self {
            Preset::Paper => 1000,
            Preset::Desk => 100,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an ensemble on the training part of a CSV dataset.
    Train(TrainArgs),
    /// Score MEAN, MEDIAN and density-peak aggregation on the test split.
    Compare(CompareArgs),
    /// Dump the estimated density of one input's prediction set.
    Density(DensityArgs),
    /// Train on gapped synthetic data and compare aggregators inside the gaps.
    Synthetic(SyntheticArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainingArgs {
    /// Ensemble size (default from --preset).
    #[arg(long, env = "BAGSCORE_N_NETS")]
    pub n_nets: Option<usize>,

    /// Member i is trained with seed `seed_base + i - 1`.
    #[arg(long, default_value_t = 1)]
    pub seed_base: u64,

    #[arg(long, default_value_t = 500, env = "BAGSCORE_EPOCHS")]
    pub epochs: usize,

    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,

    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,

    /// Epochs without validation improvement before stopping (0 disables).
    #[arg(long, default_value_t = 50)]
    pub patience: usize,

    /// Per-member validation fraction.
    #[arg(long, default_value_t = 0.3)]
    pub val_fraction: f64,

    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_values_t = [20usize, 20, 20])]
    pub hidden: Vec<usize>,

    /// Hidden layer activations (linear or tanh).
    #[arg(long, value_delimiter = ',', default_values = ["linear", "tanh", "linear"])]
    pub activations: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct KdeArgs {
    #[arg(long, default_value_t = 1000)]
    pub grid_divisor: usize,

    /// Kernel width is sigma divided by this.
    #[arg(long, default_value_t = 6.0)]
    pub bandwidth_divisor: f64,

    /// Summation window half-width as a multiple of sigma.
    #[arg(long, default_value_t = 0.5)]
    pub window_factor: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, env = "BAGSCORE_DATASET")]
    pub dataset: PathBuf,

    #[arg(long, default_value_t = 0.1)]
    pub test_fraction: f64,

    /// Model file name inside --out-dir.
    #[arg(long, default_value = "model.bsm")]
    pub model_name: String,

    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model: PathBuf,

    #[arg(long, env = "BAGSCORE_DATASET")]
    pub dataset: PathBuf,

    /// Test fraction (default: the one recorded in the model).
    #[arg(long)]
    pub test_fraction: Option<f64>,

    #[command(flatten)]
    pub kde: KdeArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// Feature vector, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "row"
    )]
    pub x: Option<Vec<f64>>,

    /// Data row index (0-based) of --dataset to use as input.
    #[arg(long, requires = "dataset")]
    pub row: Option<usize>,

    #[arg(long)]
    pub dataset: Option<PathBuf>,

    /// Output file name inside --out-dir.
    #[arg(long, default_value = "density.csv")]
    pub output: String,

    #[command(flatten)]
    pub kde: KdeArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SyntheticArgs {
    /// Ground truth: x-sin-x, sine or cubic.
    #[arg(long, default_value = "x-sin-x")]
    pub function: String,

    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-15.0, 15.0])]
    pub domain: Vec<f64>,

    #[arg(long, default_value_t = 300)]
    pub n_train: usize,

    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,

    /// Interval without training samples, `lo,hi`; repeatable.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub gap: Vec<f64>,

    /// Disable the default gap.
    #[arg(long)]
    pub no_gap: bool,

    /// Number of evenly spaced query points (inside the gaps if any).
    #[arg(long, default_value_t = 9)]
    pub queries: usize,

    /// Explicit query point; repeatable, overrides --queries.
    #[arg(long, allow_hyphen_values = true)]
    pub query: Vec<f64>,

    #[command(flatten)]
    pub training: TrainingArgs,

    #[command(flatten)]
    pub kde: KdeArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                return Err(crate::Error::InvalidInput(e.to_string()));
            }
            let _ = e.print();
            return Ok(());
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.common.out_dir)
        .map_err(|e| crate::Error::io(&cli.common.out_dir, e))?;
    match &cli.command {
        Command::Train(a) => cmd_train(&cli.common, a).map(|_| ()),
        Command::Compare(a) => cmd_compare(&cli.common, a).map(|_| ()),
        Command::Density(a) => cmd_density(&cli.common, a).map(|_| ()),
        Command::Synthetic(a) => cmd_synthetic(&cli.common, a).map(|_| ()),
    }
}
