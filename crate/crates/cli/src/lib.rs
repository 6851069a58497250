//! Command-line front end: synthetic scenes, fusion, parameter estimation
//! and evaluation over JSON Lines frame files.

pub mod commands;
pub mod config;

use std::fmt;
use std::io::Write;

use clap::{Parser, Subcommand};

pub use commands::fuse::{FuseArgs, FuseSummary};
pub use commands::{eval::EvalArgs, inverse::InverseArgs, synth::SynthArgs, traj::TrajArgs};

#[derive(Debug, Parser)]
#[command(name = "framefusion", version, about = "Fuse 3D detections across frames with vehicle motion models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fuse every frame of a detection stream with its history.
    Fuse(FuseArgs),
    /// Generate a synthetic ground-truth and detection stream.
    Synth(SynthArgs),
    /// Attach motion parameters estimated from tracks.
    Inverse(InverseArgs),
    /// Compare raw and fused detections against ground truth.
    Eval(EvalArgs),
    /// Forward-prediction error of each motion model on a turning track.
    TrajCompare(TrajArgs),
}

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Unreadable or inconsistent input data (exit 2).
    Data(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<framefusion::Error> for CliError {
    fn from(e: framefusion::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.into())
    }
}

/// What a command reports back besides its files.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Fuse(FuseSummary),
    Done,
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Fuse(a) => commands::fuse::run(a, out).map(Outcome::Fuse),
        Command::Synth(a) => commands::synth::run(a, out).map(|_| Outcome::Done),
        Command::Inverse(a) => commands::inverse::run(a, out).map(|_| Outcome::Done),
        Command::Eval(a) => commands::eval::run(a, out).map(|_| Outcome::Done),
        Command::TrajCompare(a) => commands::traj::run(a, out).map(|_| Outcome::Done),
    }
}
