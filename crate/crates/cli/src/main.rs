//! `vsrfault`: reproducible sensor-fault experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vsr_fault::signal::{GainRange, SignalConfig};

#[derive(Debug, Parser)]
#[command(
    name = "vsrfault",
    version,
    about = "Current-sensor fault diagnosis experiments"
)]
struct Cli {
    /// Worker threads; results are identical for every value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled feature dataset CSV.
    Gen(GenArgs),
    /// Train a forest on a dataset CSV and write a model file.
    Train(TrainArgs),
    /// Evaluate a model on a dataset CSV.
    Eval(EvalArgs),
    /// Accuracy against tree count on one split.
    Sweep(SweepArgs),
    /// Diagnose a stream cycle by cycle.
    Diagnose(DiagnoseArgs),
    /// Synthesize a fault scenario as a stream CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
struct SignalArgs {
    /// Phase current amplitude in amperes [default: 10.4167]
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    grid_freq: f64,
    #[arg(long, default_value_t = 25_600.0)]
    sample_rate: f64,
    /// Noise standard deviation as a fraction of the amplitude.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[arg(long, default_value_t = 0.6)]
    soft_min: f64,
    #[arg(long, default_value_t = 0.8)]
    soft_max: f64,
    #[arg(long, default_value_t = 0.3)]
    hard_min: f64,
    #[arg(long, default_value_t = 0.5)]
    hard_max: f64,
}

impl SignalArgs {
    fn config(&self) -> SignalConfig {
        SignalConfig {
            amplitude: self
                .amplitude
                .unwrap_or(vsr_fault::signal::DEFAULT_AMPLITUDE),
            grid_freq: self.grid_freq,
            sample_rate: self.sample_rate,
            noise_sigma_frac: self.noise,
            soft_range: GainRange::new(self.soft_min, self.soft_max),
            hard_range: GainRange::new(self.hard_min, self.hard_max),
        }
    }
}

#[derive(Debug, Clone, Args)]
struct ForestArgs {
    /// Candidate features per split [default: ceil(sqrt(dim))]
    #[arg(long)]
    m_features: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_leaf: usize,
    /// Depth cap [default: unlimited]
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = vsr_fault::dataset::DEFAULT_PER_CLASS)]
    per_class: usize,
    /// texture or raw
    #[arg(long, default_value = "texture")]
    features: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    signal: SignalArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    trees: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Share of rows used for training; the rest is held out and scored.
    /// 1 trains on everything.
    #[arg(long, default_value_t = vsr_fault::dataset::DEFAULT_TRAIN_FRAC)]
    train_frac: f64,
    #[command(flatten)]
    forest: ForestArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Per-class accuracy CSV [default: stdout]
    #[arg(long)]
    report: Option<PathBuf>,
    /// Confusion matrix CSV.
    #[arg(long)]
    confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated tree counts.
    #[arg(long, value_delimiter = ',', default_value = "10,50,100,200")]
    trees: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = vsr_fault::dataset::DEFAULT_TRAIN_FRAC)]
    train_frac: f64,
    /// Curve CSV [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    forest: ForestArgs,
}

#[derive(Debug, Clone, Args)]
struct ScenarioArgs {
    /// Post-onset state: 0-9 or a name such as a-soft, ab-hard, a-soft-b-hard.
    #[arg(long)]
    scenario: Option<String>,
    /// Pre-onset state.
    #[arg(long, default_value = "normal")]
    pre: String,
    #[arg(long, default_value_t = 2)]
    onset: usize,
    #[arg(long, default_value_t = 5)]
    cycles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    model: PathBuf,
    /// Stream CSV to diagnose instead of synthesizing a scenario.
    #[arg(long, conflicts_with = "scenario")]
    stream: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Records CSV [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    signal: SignalArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Stream CSV [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    signal: SignalArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
