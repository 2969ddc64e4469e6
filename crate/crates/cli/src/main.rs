//! `infoval`: simulate, estimate and aggregate the value of private
//! information from tick data.
//!
//! Exit codes: 0 success, 1 failed invariant check, 2 bad configuration,
//! 3 input/output error.

mod bounds;
mod config;
mod estimate;
mod output;
mod panel;
mod simulate;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Invalid flags, values or config files.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser, Debug)]
#[command(name = "infoval", version, about, args_override_self = true)]
struct Cli {
    /// Flat `key = value` file of flags for the subcommand; flags given on
    /// the command line take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<std::path::PathBuf>,

    /// Worker threads (default: all cores). Outputs do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate Kyle-Back sessions, write tapes and an oracle check summary
    Simulate(simulate::SimulateArgs),
    /// Sign trades, build bars and write per stock-day estimates
    Estimate(estimate::EstimateArgs),
    /// Aggregate value of information as a percentage of market cap
    Panel(panel::PanelArgs),
    /// Earnings event study of the log value of information
    EventStudy(panel::EventStudyArgs),
    /// Fixed-effects regression with clustered standard errors
    Regress(panel::RegressArgs),
    /// Risk-adjustment bound and fee comparison
    Bounds(bounds::BoundsArgs),
    /// Mean value of information across one varying setting
    Sweep(estimate::SweepArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<infoval_core::Error>() {
            return match e {
                infoval_core::Error::InvalidParameter(_) => 2,
                infoval_core::Error::Io(_) | infoval_core::Error::Csv(_) | infoval_core::Error::Malformed(_) => 3,
                _ => 1,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 3;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Estimate(a) => estimate::run(&a),
        Command::Panel(a) => panel::run_panel(&a),
        Command::EventStudy(a) => panel::run_event_study(&a),
        Command::Regress(a) => panel::run_regress(&a),
        Command::Bounds(a) => bounds::run(&a),
        Command::Sweep(a) => estimate::run_sweep(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: invariant checks failed (see summary)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
