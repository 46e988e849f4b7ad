//! `ssvep` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

mod commands;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ssvep_core::canonical::{DEFAULT_RIDGE, DEFAULT_TAU};
use ssvep_core::filterbank::DEFAULT_SUBBANDS;
use ssvep_core::FusionParams;

use crate::parse::FloatList;

#[derive(Parser, Debug)]
#[command(name = "ssvep", version, about = "SSVEP frequency recognition with spatio-spectral CCA")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Leave-one-out benchmark of one or both methods.
    Bench(BenchArgs),
    /// Grid search over the fusion weight parameters.
    Gridsearch(GridArgs),
    /// Classify one record against templates built from the other trials.
    Recognize(RecognizeArgs),
    /// Print a dataset's header and metadata.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Stimulus frequencies, `start:step:end` or comma list.
    #[arg(long, value_parser = parse::frequency_flag, default_value = "9.25:0.5:14.75")]
    freqs: FloatList,
    /// Stimulus phases in radians (default cycles 0, pi/2, pi, 3pi/2).
    #[arg(long, value_parser = parse::list_flag)]
    phases: Option<FloatList>,
    #[arg(long, default_value_t = 8)]
    channels: usize,
    #[arg(long, default_value_t = 15)]
    trials: usize,
    /// Record duration in seconds.
    #[arg(long, default_value_t = 4.0)]
    dur: f64,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 256.0)]
    fs: f64,
    #[arg(long, default_value_t = 3)]
    harmonics: usize,
    /// Per-channel SNR in dB, or `inf` for noiseless data.
    #[arg(long, value_parser = parse::snr, allow_hyphen_values = true, default_value = "0")]
    snr: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = MixingArg::Random)]
    mixing: MixingArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MixingArg {
    Random,
    Identity,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Proposed,
    Baseline,
    Both,
}

#[derive(Args, Debug, Clone, Copy)]
struct ParamArgs {
    /// Embedding delay in samples.
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: usize,
    /// Number of filterbank subbands.
    #[arg(long, default_value_t = DEFAULT_SUBBANDS)]
    sn: usize,
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    a1: f64,
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    b1: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    a2: f64,
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    b2: f64,
    /// Relative ridge on the covariance diagonals.
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    ridge: f64,
}

impl ParamArgs {
    fn params(&self) -> FusionParams {
        FusionParams {
            a1: self.a1,
            b1: self.b1,
            a2: self.a2,
            b2: self.b2,
            sn: self.sn,
            tau: self.tau,
            ridge: self.ridge,
        }
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Input `.ssvp` dataset.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    /// Window lengths in seconds.
    #[arg(long, value_parser = parse::list_flag, default_value = "0.25,0.5,0.75,1.0")]
    windows: FloatList,
    /// Window start in seconds (default: the dataset's visual latency).
    #[arg(long)]
    start: Option<f64>,
    /// Subject label for the CSV (default: file stem).
    #[arg(long)]
    subject: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
    /// Results CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse::list_flag, default_value = "0.2,0.4,0.6,0.8,1,1.2,1.4,1.6")]
    a1_grid: FloatList,
    #[arg(long, value_parser = parse::list_flag, default_value = "0,0.1,0.2,0.3,0.4,0.5")]
    b1_grid: FloatList,
    #[arg(long, value_parser = parse::list_flag, default_value = "0.5,1,1.5,2,2.5,3")]
    a2_grid: FloatList,
    #[arg(long, value_parser = parse::list_flag, default_value = "0,0.25,0.5")]
    b2_grid: FloatList,
    #[arg(long, default_value_t = 1.0)]
    window: f64,
    #[arg(long)]
    start: Option<f64>,
    #[command(flatten)]
    params: ParamArgs,
    /// Grid table CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RecognizeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Held-out trial (0-based).
    #[arg(long)]
    trial: usize,
    /// True frequency index of the held-out record (0-based).
    #[arg(long)]
    freq: usize,
    #[arg(long, default_value_t = 1.0)]
    window: f64,
    #[arg(long)]
    start: Option<f64>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    data: PathBuf,
    /// Also print the filterbank's magnitude response at each band center.
    #[arg(long)]
    filters: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Bench(a) => commands::bench(a),
        Command::Gridsearch(a) => commands::gridsearch(a),
        Command::Recognize(a) => commands::recognize(a),
        Command::Inspect(a) => commands::inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
