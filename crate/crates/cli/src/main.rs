//! `het`: track, evaluate and generate synthetic sequences.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use het_core::HetError;

#[derive(Debug, Parser)]
#[command(name = "het", version, about = "Hierarchical ensemble visual tracker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track one sequence from an initial box.
    Track(TrackArgs),
    /// One-pass evaluation over sequences with ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic sequence from a scenario file.
    Synth(SynthArgs),
}

/// Flags shared by `track` and `eval`.
#[derive(Debug, Args)]
struct TrackerFlags {
    /// Config file with `key = value` lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Search stride in pixels.
    #[arg(long, value_name = "N")]
    stride: Option<u32>,
    /// Offset search centers by the predicted displacement.
    #[arg(long)]
    predictive_search: bool,
    /// Also write per-frame diagnostics as JSON lines.
    #[arg(long)]
    diag: bool,
    #[arg(long, value_name = "DIR", default_value = "het-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrackArgs {
    /// Sequence directory containing `img/`.
    #[arg(long, value_name = "DIR")]
    seq: PathBuf,
    /// Initial box `X,Y,W,H` (0-based). Defaults to the first ground-truth box.
    #[arg(long, value_name = "X,Y,W,H")]
    init: Option<String>,
    #[command(flatten)]
    flags: TrackerFlags,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Sequence directories (repeatable).
    #[arg(long = "seq", value_name = "DIR", required = true)]
    seqs: Vec<PathBuf>,
    #[command(flatten)]
    flags: TrackerFlags,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Scenario file with `key = value` lines.
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Output sequence directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_TRACK_LOST: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<HetError> for Failure {
    fn from(e: HetError) -> Self {
        let code = match e {
            HetError::Io { .. } | HetError::Decode { .. } => EXIT_IO,
            HetError::TrackLost { .. } => EXIT_TRACK_LOST,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Track(a) => commands::track(&a.seq, a.init.as_deref(), &a.flags),
        Command::Eval(a) => commands::eval(&a.seqs, &a.flags),
        Command::Synth(a) => commands::synth(&a.spec, a.seed, &a.out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("het: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
