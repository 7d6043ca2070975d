use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qfzeta::cli::{run_cache_admin, run_config, Overrides};

/// Arithmetic invariants, representation measures, and modular-form
/// verification for indefinite integral quadratic forms.
#[derive(Parser)]
#[command(name = "qfzeta", version, about)]
struct Args {
    /// Job config file (flat key-value text with a gram2 block)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Density cache file
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads for the counting kernels
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Sampling seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and CSV side files
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Cache administration
    Cache {
        /// stats | verify | clear
        action: String,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match &args.command {
        Some(Command::Cache { action }) => {
            let Some(cache) = &args.cache else {
                eprintln!("error: cache admin needs --cache PATH");
                return ExitCode::from(1);
            };
            run_cache_admin(action, cache)
        }
        None => {
            let Some(config) = &args.config else {
                eprintln!("error: --config PATH is required (or use the `cache` subcommand)");
                return ExitCode::from(1);
            };
            let overrides = Overrides {
                cache: args.cache.clone(),
                seed: args.seed,
                out: args.out.clone(),
                threads: args.threads,
            };
            run_config(config, &overrides)
        }
    };
    ExitCode::from(code.clamp(0, 255) as u8)
}
