use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use infoval_core::bounds::puzzle_report;
use infoval_core::{PuzzleInputs, PuzzleReport, SdfSpec};

use crate::output::{create, write_json};

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// Value of information, percent of market cap per year
    #[arg(long, default_value_t = 0.04)]
    omega: f64,
    /// Standard deviation of the yearly value, percent of market cap
    #[arg(long, default_value_t = 0.03)]
    sigma_omega: f64,
    /// Entropy of the stochastic discount factor
    #[arg(long, default_value_t = 0.58)]
    entropy: f64,
    /// Expense ratio of active funds, percent
    #[arg(long, default_value_t = 0.64)]
    fee_active: f64,
    /// Expense ratio of passive funds, percent
    #[arg(long, default_value_t = 0.05)]
    fee_passive: f64,
    /// Aggregate fees for active management, percent of market cap
    #[arg(long, default_value_t = 0.67)]
    fee_benchmark: f64,
    /// Value of information on earnings days relative to other days
    #[arg(long, default_value_t = 3.57)]
    earnings_multiplier: f64,
    /// Fraction of trading days that are earnings days
    #[arg(long, default_value_t = 0.01)]
    earnings_fraction: f64,
    /// Optional key,value CSV of the report; a JSON summary goes beside it
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BoundsSummary<'a> {
    command: &'static str,
    report: &'a PuzzleReport,
    verdict: String,
    passed: bool,
}

pub fn run(a: &BoundsArgs) -> Result<bool> {
    let inputs = PuzzleInputs {
        omega_pct: a.omega,
        sigma_omega_pct: a.sigma_omega,
        fee_active: a.fee_active,
        fee_passive: a.fee_passive,
        fee_benchmark: a.fee_benchmark,
        earnings_multiplier: a.earnings_multiplier,
        earnings_day_fraction: a.earnings_fraction,
    };
    let report = puzzle_report(inputs, SdfSpec::from_entropy(a.entropy)?)?;
    println!("{report}");
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        writeln!(w, "key,value")?;
        for (k, v) in report.csv_rows() {
            writeln!(w, "{k},{v}")?;
        }
        w.flush()?;
        write_json(
            &crate::output::summary_path(out),
            &BoundsSummary { command: "bounds", report: &report, verdict: report.verdict(), passed: true },
        )?;
    }
    Ok(true)
}
