//! Batch command-line surface over the pipeline stages, one subcommand per
//! stage, driven by a single TOML config with reproducible run manifests.
//!
//! Exit codes: 0 on success, 1 on a pipeline failure (the failing stage is
//! named), 2 on a bad configuration.

mod config;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "heatcast",
    about = "Occupational heat-exposure pipeline: wearable streams to survivability forecasts",
    version
)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Caps worker parallelism (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort and a climate-ensemble fixture.
    Synth,
    /// Extract the one-minute feature table from raw streams.
    Features,
    /// Build the restricted correlation network.
    Correlate,
    /// Learn candidate structures, select by validation NMAE, refit, test.
    Train,
    /// Forecast biomarkers under climate-model deltas.
    Forecast,
    /// Compute exposure metrics with bootstrap uncertainty.
    Survive,
    /// Aggregate stage outputs into a report.
    Report,
}

impl Command {
    fn stage_name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Features => "features",
            Command::Correlate => "correlate",
            Command::Train => "train",
            Command::Forecast => "forecast",
            Command::Survive => "survive",
            Command::Report => "report",
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("HEATCAST_LOG", "info"),
    )
    .format_timestamp(None)
    .init();

    let cli = Cli::parse();

    let mut config = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("heatcast: bad config: {:#}", e);
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(out) = cli.out {
        config.paths.out_dir = out;
    }
    if let Err(e) = config.validate() {
        eprintln!("heatcast: bad config: {:#}", e);
        return ExitCode::from(2);
    }

    if cli.jobs > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global()
        {
            log::warn!("could not cap worker threads: {}", e);
        }
    }

    let stage = cli.command.stage_name();
    let result = match cli.command {
        Command::Synth => stages::run_synth(&config),
        Command::Features => stages::run_features(&config),
        Command::Correlate => stages::run_correlate(&config),
        Command::Train => stages::run_train(&config),
        Command::Forecast => stages::run_forecast(&config),
        Command::Survive => stages::run_survive(&config),
        Command::Report => stages::run_report(&config),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("heatcast: stage {} failed: {:#}", stage, e);
            ExitCode::from(1)
        }
    }
}
