use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use placenet_autograd::AdError;
use placenet_cli::config::{ConfigError, RunConfig};
use placenet_cli::pipeline::{
    run_pipeline, stage_build, stage_evaluate, stage_featurize, stage_ingest, stage_rewire,
    stage_synth, stage_train, IncompleteRun,
};
use placenet_cli::report::stage_report;
use placenet_core::evalstat::EvalError;
use placenet_models::ModelError;

/// Faculty-placement prediction pipeline over temporal co-authorship graphs.
#[derive(Parser)]
#[command(name = "placenet", version, disable_help_subcommand = true)]
struct Cli {
    /// Run configuration (INI).
    #[arg(long, global = true, default_value = "placenet.ini")]
    config: PathBuf,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic hiring market into the output directory.
    Synth,
    /// Parse, link, and impute the raw tables into one dataset file.
    Ingest,
    /// Build the yearly co-authorship snapshots.
    Build,
    /// Write feature tensors, the pooled split, and per-year masks.
    Featurize,
    /// Train every (model, threshold, repeat) cell of the grid.
    Train,
    /// Retrain on degree-preserving rewired graphs.
    Rewire,
    /// Recompute metric rows from the stored scores.
    Evaluate,
    /// Assemble the report from the stored scores.
    Report,
    /// Run every stage in order.
    Pipeline,
}

/// 0 success, 2 configuration, 3 data, 4 numerics, 5 incomplete run.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(m) = cause.downcast_ref::<ModelError>() {
            if matches!(m, ModelError::BadSpec(_)) {
                return 2;
            }
        }
        if let Some(a) = cause.downcast_ref::<AdError>() {
            if matches!(a, AdError::NonFinite { .. }) {
                return 4;
            }
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            match e {
                EvalError::NonFiniteScore(_) => return 4,
                EvalError::MissingThreshold { .. } => return 5,
                _ => {}
            }
        }
        if cause.is::<IncompleteRun>() {
            return 5;
        }
    }
    3
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = RunConfig::load(&cli.config, cli.out.clone(), cli.seed)?;
    match cli.command {
        Command::Synth => stage_synth(&cfg),
        Command::Ingest => stage_ingest(&cfg),
        Command::Build => stage_build(&cfg),
        Command::Featurize => stage_featurize(&cfg),
        Command::Train => stage_train(&cfg),
        Command::Rewire => stage_rewire(&cfg),
        Command::Evaluate => stage_evaluate(&cfg),
        Command::Report => stage_report(&cfg),
        Command::Pipeline => run_pipeline(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
