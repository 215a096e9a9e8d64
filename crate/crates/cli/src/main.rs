//! `mechrxn`: mechanism prediction, pathway search, proton-transfer
//! generation, training and evaluation.
//!
//! Exit codes: 0 success, 1 usage/config/runtime error, 2 ran but produced
//! nothing (no prediction, no pathway).

mod commands;
mod config;
mod manifest;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_NONE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "mechrxn", version, about = "Mechanistic polar reaction prediction")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// TOML config file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory holding source.mlp, sink.mlp and ranker.mlp.
    #[arg(long, global = true, env = "MECHRXN_MODEL_DIR")]
    pub model_dir: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Also write a run manifest here (ptgen and train always write one into their output directory).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rank single elementary steps for a reactant set.
    Predict(PredictArgs),
    /// Search for a multistep mechanism reaching a target.
    Pathway(PathwayArgs),
    /// Generate proton-transfer steps from acid and base inventories.
    Ptgen(PtgenArgs),
    /// Train the source, sink and ranker networks.
    Train(TrainArgs),
    /// Score predictions, reactive sites or a pathway benchmark.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Reaction-size and element histograms of a step file (CSV).
    Stats(StatsArgs),
    /// Write reaction fingerprints of a step file as a dense dump.
    Fingerprints(FingerprintArgs),
    /// Serve the adapter protocol on stdin/stdout with the echo backend.
    #[command(hide = true)]
    ServeEcho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Twostep,
    Hybrid,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Reactant SMILES, molecules separated by '.'.
    pub reactants: String,
    #[arg(short)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Source and sink sites kept per role.
    #[arg(long)]
    pub k_sites: Option<usize>,
    /// Adapter command line (split on whitespace), or `builtin:echo`. Repeatable.
    #[arg(long = "adapter")]
    pub adapters: Vec<String>,
    /// Per-request adapter deadline, e.g. `30s`.
    #[arg(long)]
    pub deadline: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PathwayPredictor {
    Hybrid,
    Twostep,
    AdapterOnly,
    /// Canned steps from `--table`.
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SelectionArg {
    FirstFound,
    MaxMinStep,
}

#[derive(Args, Debug)]
pub struct PathwayArgs {
    pub reactants: String,
    /// Target SMILES, or a formula such as `formula:C10H16N2O5S`.
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub branching: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// e.g. `2h`, `90s`.
    #[arg(long)]
    pub time_budget: Option<String>,
    #[arg(long, value_enum)]
    pub selection: Option<SelectionArg>,
    /// Known intermediates, SMILES separated by ';'.
    #[arg(long)]
    pub intermediates: Option<String>,
    #[arg(long, value_enum)]
    pub predictor: Option<PathwayPredictor>,
    /// Step-record file for `--predictor table`; each record's reactants are a node.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long = "adapter")]
    pub adapters: Vec<String>,
    #[arg(long)]
    pub k_sites: Option<usize>,
    #[arg(long)]
    pub deadline: Option<String>,
}

#[derive(Args, Debug)]
pub struct PtgenArgs {
    #[arg(long)]
    pub acids: PathBuf,
    #[arg(long)]
    pub bases: PathBuf,
    /// Output directory for shards and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub shard_size: Option<usize>,
    #[arg(long)]
    pub heteroatom_cutoff: Option<f64>,
    #[arg(long)]
    pub carbon_cutoff: Option<f64>,
    #[arg(long)]
    pub intrinsic_log_k0: Option<f64>,
    #[arg(long)]
    pub smooth_eigen: bool,
    /// Keep a uniform sample of this many steps instead of all.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// 512-256-128-164-1 classifiers.
    Standard,
    /// 512-256-128-64-1 classifiers.
    Corrected,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Step-record training file.
    #[arg(long)]
    pub data: PathBuf,
    /// Output model directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Split 80/10/10, train on the first part and report site accuracy on the others.
    #[arg(long)]
    pub holdout: bool,
    /// Combinatorial step file sampled into the training set.
    #[arg(long)]
    pub extra: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub extra_n: usize,
    /// Decoy mechanisms per true step for the ranker.
    #[arg(long)]
    pub decoys: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Top-N accuracy of candidate lists against reference products.
    Topn(TopnArgs),
    /// Joint top-N reactive-site accuracy of the trained classifiers.
    Sites(SitesArgs),
    /// Per-depth target recovery on a benchmark file.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug)]
pub struct TopnArgs {
    /// Step-record file holding the reference products.
    #[arg(long)]
    pub references: PathBuf,
    /// NDJSON, one `{"candidates": [smiles, ...]}` per reference; omit to run the two-step models.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Comma-separated N values.
    #[arg(long, default_value = "1,3,5,10")]
    pub ns: String,
    /// Count resonance-equivalent products as hits.
    #[arg(long)]
    pub resonance: bool,
    #[arg(long)]
    pub k_sites: Option<usize>,
    /// Write CSV here as well.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SitesArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "1,2,3,5,10")]
    pub ns: String,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    pub file: PathBuf,
    /// Progress journal; finished records are skipped on a rerun.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub predictor: Option<PathwayPredictor>,
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long = "adapter")]
    pub adapters: Vec<String>,
    #[arg(long)]
    pub branching: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub time_budget: Option<String>,
    #[arg(long)]
    pub k_sites: Option<usize>,
    #[arg(long)]
    pub deadline: Option<String>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FingerprintArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
