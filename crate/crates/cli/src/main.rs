//! `hybridzo` experiment harness.
//!
//! Subcommands: `run`, `sweep`, `probe`, `plan`, `check`. Exit status 0 on
//! success, 1 when a check fails, 2 for configuration errors, 3 when a run
//! diverges and 4 on numeric failure.

mod check;
mod config;
mod error;
mod output;
mod plan;
mod probe;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliResult, Status};

#[derive(Parser)]
#[command(name = "hybridzo", version, about = "Hybrid zeroth-/first-order SGD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the optimizer and write a trace CSV.
    Run(Common),
    /// Run a grid of (eta_x, eta_y) pairs and write one CSV row per cell.
    Sweep(Common),
    /// Probe local smoothness along a trajectory.
    Probe(Common),
    /// Print admissible rates, perturbation size and epoch budget.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Treat --config as an experiment config and probe constants at its start point.
        #[arg(long)]
        estimate: bool,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run the oracle validation suite.
    Check {
        #[arg(long)]
        seed: Option<u64>,
        /// Add a check that must fail (curvature envelope too small).
        #[arg(long)]
        negative_control: bool,
        /// Also write the results as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> CliResult<Status> {
    match cli.command {
        Command::Run(c) => run::cmd_run(&c.config, c.seed, c.out.as_deref()),
        Command::Sweep(c) => sweep::cmd_sweep(&c.config, c.seed, c.out.as_deref()),
        Command::Probe(c) => probe::cmd_probe(&c.config, c.seed, c.out.as_deref()),
        Command::Plan {
            common,
            estimate,
            epsilon,
            delta,
        } => plan::cmd_plan(plan::PlanArgs {
            config: &common.config,
            estimate,
            seed: common.seed,
            out: common.out.as_deref(),
            epsilon,
            delta,
        }),
        Command::Check {
            seed,
            negative_control,
            out,
        } => check::cmd_check(seed, negative_control, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.status.into()
        }
    }
}
