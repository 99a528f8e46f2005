mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};
use modal_presets::Preset;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, ExitCode};

/// Differentiable modal synthesis of strings, membranes and plates.
#[derive(Debug, Parser)]
#[command(name = "modal", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for multi-start fits and tensor construction.
    #[arg(long, global = true, env = "MODAL_THREADS")]
    threads: Option<usize>,
    /// Named instrument preset; overrides the preset in the config file.
    #[arg(long, global = true)]
    preset: Option<Preset>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate and write the readout WAV and modal trajectories.
    Simulate,
    /// Fit model parameters to a WAV recording or an envelope CSV.
    Fit {
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Time the stepping loop of the nonlinear plate models.
    Benchmark,
    /// Print the mode table.
    Modes,
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let config = cli.config.as_deref().map(RunConfig::load).transpose()?;
    if let Command::Benchmark = cli.command {
        return commands::cmd_benchmark(config, &cli.out);
    }
    let resolved = config.unwrap_or_default().resolve(cli.preset, cli.seed)?;
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&resolved, &cli.out),
        Command::Fit { target } => commands::cmd_fit(&resolved, target, &cli.out),
        Command::Modes => commands::cmd_modes(&resolved, &cli.out),
        Command::Benchmark => unreachable!("handled above"),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            process::exit(ExitCode::Validation as i32);
        }
        Err(e) => {
            let _ = e.print();
            process::exit(ExitCode::Success as i32);
        }
    };
    match run(cli) {
        Ok(manifest) => log::info!("wrote {}", manifest.display()),
        Err(e) => {
            eprintln!("error: {e}");
            process::exit(e.exit_code() as i32);
        }
    }
}
