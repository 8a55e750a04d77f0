//! Batch experiment runner.
//!
//! ```text
//! cransim run               one simulation plus its FCFS reference
//! cransim sweep-thresholds  state mix and metrics over a bw x et threshold grid
//! cransim compare-policies  tmcrn and the baselines at each threshold point
//! cransim sweep-windows     forecast error and training time per window width
//! cransim default-config    print the full config with defaults
//! ```
//!
//! Exit codes: 0 success, 1 config error, 2 runtime error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cransim_core::par::Execution;
use cransim_core::scheduler::Policy;

use commands::CliError;
use config::{ConfigError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "cransim", version, about = "Traffic-aware placement simulator for cloud RAN workloads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and its FCFS reference.
    Run(Common),
    /// Sweep bandwidth and execution-time thresholds.
    SweepThresholds(Common),
    /// Compare policies on the same workload.
    ComparePolicies(Common),
    /// Sweep forecast window widths on a synthetic series.
    SweepWindows(Common),
    /// Print the default configuration as TOML.
    DefaultConfig,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// TOML experiment config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Policy, or comma-separated list for compare-policies.
    #[arg(long, value_delimiter = ',')]
    policy: Vec<Policy>,
    /// Number of generated jobs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Simulated intervals (also the arrival horizon).
    #[arg(long)]
    intervals: Option<u32>,
    /// Run sweep cells one after another.
    #[arg(long)]
    sequential: bool,
}

fn configure(c: &Common, single_policy: bool) -> Result<ExperimentConfig, CliError> {
    if single_policy && c.policy.len() > 1 {
        return Err(ConfigError::Invalid {
            field: "policy".into(),
            msg: "this command takes a single policy".into(),
        }
        .into());
    }
    let mut cfg = ExperimentConfig::load(c.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: c.seed,
        out: c.out.clone(),
        policies: c.policy.clone(),
        jobs: c.jobs,
        intervals: c.intervals,
        execution: c.sequential.then_some(Execution::Sequential),
    });
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(c) => configure(c, true).and_then(|cfg| commands::cmd_run(&cfg)),
        Command::SweepThresholds(c) => configure(c, true).and_then(|cfg| commands::cmd_sweep_thresholds(&cfg)),
        Command::ComparePolicies(c) => configure(c, false).and_then(|cfg| commands::cmd_compare_policies(&cfg)),
        Command::SweepWindows(c) => configure(c, true).and_then(|cfg| commands::cmd_sweep_windows(&cfg)),
        Command::DefaultConfig => {
            match toml::to_string(&ExperimentConfig::default()) {
                Ok(s) => {
                    print!("{s}");
                    return ExitCode::SUCCESS;
                }
                Err(e) => Err(CliError::Runtime(e.to_string())),
            }
        }
    };
    match result {
        Ok(report) => {
            print!("{}", report.text());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
