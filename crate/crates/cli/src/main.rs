//! `fiemkit` command line driver.
//!
//! Exit codes: 0 on success, 1 on a bad config or any other failure, 2 when
//! an orbit left the domain (outputs are still written).

mod callbacks;
mod commands;
mod config;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use commands::{Outcome, Run};
use config::{ExperimentConfig, Mode};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fiemkit",
    version,
    about = "Perturbed families of interval exchange maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Arithmetic for exchange-map computations; overrides `mode`.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Trajectory CSVs, one per seed.
    Iterate,
    /// Sampled symmetry lines and their crossings.
    SymmetryLines,
    /// Catalog of symmetric and non-symmetric periodic orbits.
    FindPeriodic,
    /// Continuation of one orbit in eps, with an event log.
    Sweep,
    /// Periodic intervals and saddle connections of one exchange map.
    Oracle,
    /// Runs the invariant checks; fails if any check fails.
    Verify,
}

fn run(cli: &Cli) -> Result<Outcome> {
    let path = cli.config.as_ref().context("missing --config <path>")?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("--threads")?;
    }
    let out = commands::out_dir(cli.out.as_deref(), &cfg);
    cfg.out = Some(out.clone());
    let ctx = Run::new(cfg, out)?;
    match cli.command {
        Command::Iterate => commands::iterate(&ctx),
        Command::SymmetryLines => commands::symmetry_lines(&ctx),
        Command::FindPeriodic => commands::find_periodic(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Oracle => commands::oracle(&ctx),
        Command::Verify => commands::verify(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) if o.failed => ExitCode::from(1),
        Ok(o) if o.escaped => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            let escape = e.chain().any(|c| {
                matches!(
                    c.downcast_ref(),
                    Some(fiemkit::Error::BoundaryEscape { .. })
                )
            });
            ExitCode::from(if escape { 2 } else { 1 })
        }
    }
}
