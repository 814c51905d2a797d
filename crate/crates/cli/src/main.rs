//! `metacost`: validate gait datasets, evaluate MEE models, run Monte-Carlo
//! sensitivity analyses, quasi-optimize parameters and sweep deep-model
//! feature sets.
//!
//! Exit codes: 0 success, 1 validation or configuration failure, 2 I/O
//! failure, 3 numerical failure.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigFile, Overrides, RunConfig, OUT_ENV};
use error::CliError;

#[derive(Parser)]
#[command(name = "metacost", version, about = "Metabolic energy expenditure models for gait")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset against every data-model invariant.
    Validate,
    /// Score models with fixed parameters; optionally emit rate curves.
    Evaluate {
        /// Write per-channel rate curves (W/kg vs gait-cycle %).
        #[arg(long)]
        curves: bool,
    },
    /// Sobol sampling, behavioural filtering and KS sensitivity indices.
    Sense,
    /// Subject-wise leave-one-out quasi-optimization.
    Quasiopt,
    /// Exhaustive deep-model feature-combination sweep.
    Sweep,
    /// Generate a synthetic dataset into the output directory.
    Synth,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset directory or manifest path.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Model name, or `all`.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Monte-Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Behavioural set size K.
    #[arg(long, global = true)]
    behavioural: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Leading Sobol points to skip.
    #[arg(long, global = true)]
    skip: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (default: $METACOST_OUT, then ./metacost-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Zero negative channel rates before integrating.
    #[arg(long, global = true)]
    clamp_nonneg: bool,
    /// KS statistic against the non-behavioural samples instead of all.
    #[arg(long, global = true)]
    behavioural_vs_rest: bool,
    /// Parameter range override `name=lo:hi`; repeatable.
    #[arg(long = "range", global = true)]
    ranges: Vec<String>,
    /// Comma-separated parameter values (evaluate, synth).
    #[arg(long, global = true, allow_hyphen_values = true)]
    params: Option<String>,
    /// Feature space for sweep: muscle or joint.
    #[arg(long, global = true)]
    space: Option<String>,
    /// Sweep budget: full or desk.
    #[arg(long, global = true)]
    budget: Option<String>,
    /// Random-search draws per feature set.
    #[arg(long, global = true)]
    draws: Option<usize>,
    /// Maximum training epochs.
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Synth preset: full, small or learnable.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Synth target: a model name, `activation-velocity[:gain]` or `constant[:watts]`.
    #[arg(long, global = true)]
    target: Option<String>,
    /// Synth subject count.
    #[arg(long, global = true)]
    subjects: Option<usize>,
}

impl Common {
    fn overrides(self) -> Overrides {
        Overrides {
            dataset: self.dataset,
            model: self.model,
            samples: self.samples,
            behavioural: self.behavioural,
            seed: self.seed,
            skip: self.skip,
            jobs: self.jobs,
            out: self.out,
            clamp_nonneg: self.clamp_nonneg,
            behavioural_vs_rest: self.behavioural_vs_rest,
            ranges: self.ranges,
            space: self.space,
            budget: self.budget,
            draws: self.draws,
            epochs: self.epochs,
            params: self.params,
            preset: self.preset,
            target: self.target,
            subjects: self.subjects,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = RunConfig::resolve(&cli.common.overrides(), &file, std::env::var(OUT_ENV).ok())?;
    match cli.command {
        Command::Validate => commands::validate(&cfg),
        Command::Evaluate { curves } => commands::evaluate(&cfg, curves),
        Command::Sense => commands::sense(&cfg),
        Command::Quasiopt => commands::quasiopt(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Synth => commands::synth(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
