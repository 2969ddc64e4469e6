use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use chrono::NaiveDate;
use clap::Args;
use serde::Serialize;

use infoval_core::microdata::io::{write_closes, write_quotes, write_signed_trades};
use infoval_core::microdata::synthetic::{tape_step_ns, tape_trades, tape_trades_at_quotes};
use infoval_core::sim::montecarlo::KyleSummary;
use infoval_core::sim::tape::{tape_rows, write_tape};
use infoval_core::sim::{kyle_summary, simulate_kyle};
use infoval_core::SimParams;

use crate::output::{create, write_json, Check};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Volatility of the asset value
    #[arg(long, default_value_t = 1.0)]
    sigma_v: f64,
    /// Noise-trader flow volatility
    #[arg(long, default_value_t = 1.0)]
    sigma_z: f64,
    /// Public-noise volatility added to prices
    #[arg(long, default_value_t = 0.0)]
    sigma_w: f64,
    /// Opening price
    #[arg(long, default_value_t = 100.0)]
    p0: f64,
    /// Session length in model time units
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Trading steps per session
    #[arg(long, default_value_t = 390)]
    steps: usize,
    /// Number of sessions
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Switch off the informed trader
    #[arg(long)]
    no_informed: bool,
    /// Number of sessions exported as tapes
    #[arg(long, default_value_t = 10)]
    max_tapes: usize,
    /// Also export trades at bid/ask of quotes this far either side of the
    /// previous price (with a quotes file); otherwise trades print at the
    /// tape price
    #[arg(long)]
    half_spread: Option<f64>,
    /// Trade date given to exported sessions
    #[arg(long, default_value = "2024-01-02")]
    date: NaiveDate,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'static str,
    params: &'a SimParams,
    summary: &'a KyleSummary,
    mm_t_stat: f64,
    checks: &'a [Check],
    passed: bool,
    outputs: Vec<String>,
}

fn checks(p: &SimParams, s: &KyleSummary) -> Vec<Check> {
    let oracle = p.oracle_omega();
    let lambda = p.lambda();
    let lambda_tol = (2.0 * s.lambda_levels.se).max(1e-9 * lambda.abs().max(1.0));
    let t = s.mm_t_stat();
    vec![
        Check::new(
            "noise_loss_matches_oracle",
            s.noise_loss.within(oracle, 2.0),
            format!("{:.6} +/- {:.6} vs {oracle:.6}", s.noise_loss.mean, s.noise_loss.se),
        ),
        Check::new(
            "lambda_recovered",
            (s.lambda_levels.mean - lambda).abs() <= lambda_tol,
            format!("{:.6} +/- {:.6} vs {lambda:.6}", s.lambda_levels.mean, s.lambda_levels.se),
        ),
        Check::new("market_maker_zero_profit", t.abs() < 3.0 || !p.informed, format!("t = {t:.3}")),
        Check::new(
            "path_identities",
            s.max_identity_error <= 1e-10 && s.max_zero_sum_error <= 1e-10,
            format!("identity {:.3e}, zero-sum {:.3e}", s.max_identity_error, s.max_zero_sum_error),
        ),
    ]
}

pub fn run(a: &SimulateArgs) -> Result<bool> {
    let params = SimParams {
        sigma_w: a.sigma_w,
        p0: a.p0,
        horizon: a.horizon,
        n_steps: a.steps,
        n_paths: a.paths,
        seed: a.seed,
        informed: !a.no_informed,
        ..SimParams::kyle(a.sigma_v, a.sigma_z)
    };
    params.validate()?;
    let summary = kyle_summary(&params)?;
    let checks = checks(&params, &summary);

    let mut outputs = Vec::new();
    let n_tapes = a.max_tapes.min(a.paths);
    let exportable = tape_step_ns(a.steps).is_ok();
    if !exportable && n_tapes > 0 {
        log::warn!("{} steps do not divide the trading session; trades are not exported", a.steps);
    }
    let mut trades_out = Vec::new();
    let mut quotes_out = Vec::new();
    let mut closes = Vec::new();
    for i in 0..n_tapes {
        let session = simulate_kyle(&params, i)?;
        let name = format!("tape_{i:05}.csv");
        let mut w = create(&a.out.join(&name))?;
        write_tape(&session, &mut w)?;
        w.flush()?;
        outputs.push(name);
        if exportable {
            let rows = tape_rows(&session);
            let symbol = format!("SIM{i:05}");
            match a.half_spread {
                Some(hs) => {
                    let (trades, quotes) = tape_trades_at_quotes(&rows, hs)?;
                    trades_out.push((symbol.clone(), trades));
                    quotes_out.push((symbol.clone(), quotes));
                }
                None => trades_out.push((symbol.clone(), tape_trades(&rows)?.0)),
            }
            closes.push((symbol, rows[0].p));
        }
    }
    if exportable && n_tapes > 0 {
        let trades: Vec<_> = trades_out.iter().map(|(s, t)| (s.as_str(), a.date, t.as_slice())).collect();
        let mut w = create(&a.out.join("trades.csv"))?;
        write_signed_trades(&mut w, &trades)?;
        w.flush()?;
        outputs.push("trades.csv".into());
        if a.half_spread.is_some() {
            let quotes: Vec<_> = quotes_out.iter().map(|(s, q)| (s.as_str(), a.date, q.as_slice())).collect();
            let mut w = create(&a.out.join("quotes.csv"))?;
            write_quotes(&mut w, &quotes)?;
            w.flush()?;
            outputs.push("quotes.csv".into());
        }
        let closes: Vec<_> = closes.iter().map(|(s, p)| (s.as_str(), a.date, *p)).collect();
        let mut w = create(&a.out.join("closes.csv"))?;
        write_closes(&mut w, &closes)?;
        w.flush()?;
        outputs.push("closes.csv".into());
    }

    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        eprintln!("[{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    write_json(
        &a.out.join("summary.json"),
        &Summary {
            command: "simulate",
            params: &params,
            summary: &summary,
            mm_t_stat: summary.mm_t_stat(),
            checks: &checks,
            passed,
            outputs,
        },
    )?;
    Ok(passed)
}
