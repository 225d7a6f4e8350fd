//! `quadprop` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod export;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quadprop::Error;

use crate::config::RunConfig;

const EXIT_CONFIG: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "quadprop", version, about = "Exact kernels and states of time-dependent quadratic systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Classical basis, shifted solution and particular solution over time.
    Solve(Common),
    /// Kernel over an endpoint grid at t_b.
    Kernel(Common),
    /// Wave function ψ_n on the grid at each configured time.
    State(Common),
    /// Run verification suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated suite names; all suites when omitted.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Uncertainty products, closed form against quadrature.
    Uncertainty(Common),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Validation(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_DOMAIN,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("QUADPROP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("QUADPROP_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<commands::Outcome, Error> {
    configure_threads()?;
    let (common, suite) = match &cli.command {
        Command::Solve(c) | Command::Kernel(c) | Command::State(c) | Command::Uncertainty(c) => (c, None),
        Command::Verify { common, suite } => (common, suite.as_deref()),
    };
    let cfg = RunConfig::load(&common.config)?;
    let out = &common.out;
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    match &cli.command {
        Command::Solve(_) => commands::solve(&cfg, out),
        Command::Kernel(_) => commands::kernel(&cfg, out),
        Command::State(_) => commands::state(&cfg, out),
        Command::Uncertainty(_) => commands::uncertainty(&cfg, out),
        Command::Verify { .. } => commands::verify(&cfg, out, suite),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(outcome) => {
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            if outcome.failed {
                eprintln!("verification failed");
                ExitCode::from(EXIT_VERIFY)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
