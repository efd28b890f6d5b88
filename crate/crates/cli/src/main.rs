//! `floeberg`: command-line driver for the sea-ice pipeline.
//!
//! Exit status: 0 success, 1 internal error, 2 missing input, 3 invalid
//! input or configuration.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    MissingInput(String),
    #[error("{0}")]
    Validation(String),
}

#[derive(Parser, Debug)]
#[command(name = "floeberg", version, about = "Sea-ice classification and freeboard from photon tracks")]
struct Cli {
    /// `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for chunked jobs and data-parallel training.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Primary output file (a directory for `report`).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic photon track with ground truth and label raster.
    Synth(commands::SynthArgs),
    /// Resample photons into 2 m segments.
    Ingest(commands::IngestArgs),
    /// Transfer raster classes onto segments.
    Label(commands::LabelArgs),
    /// Train a classifier on labeled segments.
    Train(commands::TrainArgs),
    /// Predict segment classes with a trained model.
    Classify(commands::ClassifyArgs),
    /// Estimate the local sea surface from leads.
    Surface(commands::SurfaceArgs),
    /// Compute per-segment freeboard and its histogram.
    Freeboard(commands::SurfaceArgs),
    /// Time a chunked job at several worker counts.
    Bench(commands::BenchArgs),
    /// Draw SVG plots from a freeboard CSV.
    Report(commands::ReportArgs),
}

/// Settings shared by every command after config and flags are merged.
pub struct Context {
    pub cfg: PipelineConfig,
    pub output: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::MissingInput(_) => 2,
                CliError::Validation(_) => 3,
            };
        }
        if let Some(e) = cause.downcast_ref::<floeberg_core::Error>() {
            if e.is_missing_input() {
                return 2;
            }
            if e.is_validation() {
                return 3;
            }
            return 1;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let mut ctx = Context { cfg, output: cli.output };
    match cli.command {
        Command::Synth(a) => commands::synth(&mut ctx, a),
        Command::Ingest(a) => commands::ingest(&mut ctx, a),
        Command::Label(a) => commands::label(&mut ctx, a),
        Command::Train(a) => commands::train(&mut ctx, a),
        Command::Classify(a) => commands::classify(&mut ctx, a),
        Command::Surface(a) => commands::surface(&mut ctx, a),
        Command::Freeboard(a) => commands::freeboard(&mut ctx, a),
        Command::Bench(a) => commands::bench(&mut ctx, a),
        Command::Report(a) => commands::report(&mut ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
