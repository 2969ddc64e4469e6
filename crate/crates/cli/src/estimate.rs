use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, ValueEnum};
use serde::Serialize;

use infoval_core::estimators::{
    assemble_days, estimate_days, write_estimates, DayInput, EstimateConfig, EstimateStats, LambdaKind, LambdaSpec,
    ScalingConstants,
};
use infoval_core::microdata::io::{read_closes, read_quotes, read_trades, ReadStats};
use infoval_core::microdata::synthetic::tape_trades;
use infoval_core::microdata::{BarPrice, Side, SigningAlgorithm, SigningConfig, TickEvent};
use infoval_core::sim::tape::read_tape;
use infoval_core::stats::MeanSe;

use crate::output::{create, open, summary_path, write_json};
use crate::ConfigError;

/// `0.004`, `1/252`.
pub fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BarPriceArg {
    Trade,
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LambdaArg {
    /// Log returns on signed shares
    Log,
    /// Dollar price changes on signed shares
    Levels,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Trades CSV: symbol,date,timestamp_ns,price,size[,side]
    #[arg(long)]
    trades: Option<PathBuf>,
    /// Quotes CSV: symbol,date,timestamp_ns,bid,ask
    #[arg(long)]
    quotes: Option<PathBuf>,
    /// Prior closes CSV: symbol,date,p_prev_close
    #[arg(long)]
    closes: Option<PathBuf>,
    /// Simulator tape(s); each becomes one stock-day named after the file
    #[arg(long, value_delimiter = ',')]
    tape: Vec<PathBuf>,
    /// Date assigned to tape inputs
    #[arg(long, default_value = "2024-01-02")]
    tape_date: NaiveDate,
}

#[derive(Args, Debug, Clone)]
pub struct OptionArgs {
    /// Bar length in seconds
    #[arg(long, default_value_t = 60.0)]
    interval: f64,
    /// Trade signing: tick, quote, clnv or given (default: given when every
    /// input day carries sides, tick otherwise)
    #[arg(long)]
    algorithm: Option<String>,
    /// Price closing each bar
    #[arg(long, value_enum, default_value_t = BarPriceArg::Trade)]
    bar_price: BarPriceArg,
    /// Price-impact regression
    #[arg(long, value_enum, default_value_t = LambdaArg::Log)]
    lambda: LambdaArg,
    /// Include an intercept in the price-impact regression
    #[arg(long)]
    intercept: bool,
    /// Drop stock-days whose prior close is below this; 0 keeps all
    #[arg(long, default_value_t = 5.0)]
    min_price: f64,
    /// Length of a trading day in years
    #[arg(long, default_value = "1/252", value_parser = parse_fraction)]
    day_fraction: f64,
    /// Dollar scale of the reported impact and flow volatility
    #[arg(long, default_value_t = 1e6)]
    scale: f64,
    /// Price-level deflator applied to the scale
    #[arg(long, default_value_t = 1.0)]
    cpi_factor: f64,
    /// A quote prevails for a trade only if older than this many nanoseconds
    #[arg(long, default_value_t = 0)]
    quote_lag_ns: i64,
    /// Side of a stream's first trade under the tick rule (1 or -1)
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    first_side: String,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    options: OptionArgs,
    /// Output CSV of per stock-day estimates
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dimension {
    Algorithm,
    Frequency,
    MinPrice,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    options: OptionArgs,
    /// Setting varied across runs
    #[arg(long, value_enum)]
    dimension: Dimension,
    /// Comma-separated settings (defaults: tick,quote,clnv; 60,300,600,1800;
    /// 5,0)
    #[arg(long, value_delimiter = ',')]
    settings: Vec<String>,
    /// Output CSV: dimension,setting,mean_omega,se,n
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Default, Serialize)]
struct Loaded {
    #[serde(skip)]
    days: Vec<DayInput>,
    trades: Option<ReadStats>,
    quotes: Option<ReadStats>,
    closes: Option<ReadStats>,
    tapes: usize,
}

fn report(name: &str, st: &ReadStats) {
    eprintln!("{name}: {} rows, {} malformed", st.rows, st.malformed);
}

fn load(input: &InputArgs) -> Result<Loaded> {
    if input.trades.is_none() && input.tape.is_empty() {
        bail!(ConfigError("no input: give --trades and/or --tape".into()));
    }
    let mut out = Loaded::default();
    if let Some(path) = &input.trades {
        let (trades, st) = read_trades(open(path)?).with_context(|| format!("reading {}", path.display()))?;
        report("trades", &st);
        out.trades = Some(st);
        let quotes = match &input.quotes {
            Some(p) => {
                let (q, st) = read_quotes(open(p)?).with_context(|| format!("reading {}", p.display()))?;
                report("quotes", &st);
                out.quotes = Some(st);
                q
            }
            None => BTreeMap::new(),
        };
        let closes = match &input.closes {
            Some(p) => {
                let (c, st) = read_closes(open(p)?).with_context(|| format!("reading {}", p.display()))?;
                report("closes", &st);
                out.closes = Some(st);
                c
            }
            None => BTreeMap::new(),
        };
        out.days = assemble_days(trades, quotes, &closes);
    }
    for path in &input.tape {
        out.days.push(tape_day(path, input.tape_date)?);
        out.tapes += 1;
    }
    Ok(out)
}

fn tape_day(path: &Path, date: NaiveDate) -> Result<DayInput> {
    let tape = read_tape(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let (trades, bounds) = tape_trades(&tape.rows)?;
    let symbol = path.file_stem().map_or_else(|| "TAPE".into(), |s| s.to_string_lossy().into_owned());
    let ticks = trades
        .iter()
        .map(|t| TickEvent::new(t.timestamp_ns, t.price, t.size))
        .collect::<infoval_core::Result<Vec<_>>>()?;
    Ok(DayInput {
        symbol,
        date,
        ticks,
        quotes: Vec::new(),
        sides: Some(trades.iter().map(|t| t.side).collect()),
        p_prev_close: tape.open_price(),
        open_price: bounds.open_price,
    })
}

fn interval_ns(secs: f64) -> Result<i64> {
    let ns = (secs * 1e9).round();
    if !(ns >= 1.0 && ns < i64::MAX as f64) {
        bail!(ConfigError(format!("--interval must be positive, got {secs}")));
    }
    Ok(ns as i64)
}

fn algorithm(name: Option<&str>, days: &[DayInput]) -> Result<SigningAlgorithm> {
    let alg = match name {
        Some(s) => SigningAlgorithm::from_str(s)?,
        None if !days.is_empty() && days.iter().all(|d| d.sides.is_some()) => SigningAlgorithm::Given,
        None => SigningAlgorithm::Tick,
    };
    if alg == SigningAlgorithm::Given && days.iter().any(|d| d.sides.is_none()) {
        bail!(ConfigError("--algorithm given needs a side on every trade".into()));
    }
    Ok(alg)
}

fn config(o: &OptionArgs, days: &[DayInput]) -> Result<EstimateConfig> {
    let first_side = Side::from_str(&o.first_side)?;
    let scaling = ScalingConstants { c: o.scale, cpi_factor: o.cpi_factor, t: o.day_fraction };
    scaling.validate()?;
    if !(o.min_price >= 0.0) {
        bail!(ConfigError(format!("--min-price must be non-negative, got {}", o.min_price)));
    }
    Ok(EstimateConfig {
        interval_ns: interval_ns(o.interval)?,
        signing: algorithm(o.algorithm.as_deref(), days)?,
        signing_cfg: SigningConfig { first_side, quote_lag_ns: o.quote_lag_ns },
        bar_price: match o.bar_price {
            BarPriceArg::Trade => BarPrice::LastTrade,
            BarPriceArg::Midpoint => BarPrice::Midpoint,
        },
        lambda: LambdaSpec {
            kind: match o.lambda {
                LambdaArg::Log => LambdaKind::LogReturn,
                LambdaArg::Levels => LambdaKind::Levels,
            },
            intercept: o.intercept,
        },
        scaling,
        min_price: o.min_price,
        ..EstimateConfig::default()
    })
}

#[derive(Serialize)]
struct EstimateSummary<'a> {
    command: &'static str,
    config: &'a EstimateConfig,
    inputs: &'a Loaded,
    stats: EstimateStats,
    mean_omega: Option<f64>,
    output: String,
    passed: bool,
}

pub fn run(a: &EstimateArgs) -> Result<bool> {
    let loaded = load(&a.input)?;
    let cfg = config(&a.options, &loaded.days)?;
    let (rows, stats) = estimate_days(&loaded.days, &cfg)?;
    eprintln!(
        "{} stock-days, {} estimated, {} below min price, {} without flow",
        stats.days, stats.estimated, stats.below_min_price, stats.undefined_slope
    );
    let mut w = create(&a.out)?;
    write_estimates(&mut w, &rows)?;
    w.flush()?;
    let omegas: Vec<f64> = rows.iter().map(|r| r.omega_hat).collect();
    write_json(
        &summary_path(&a.out),
        &EstimateSummary {
            command: "estimate",
            config: &cfg,
            inputs: &loaded,
            stats,
            mean_omega: (!omegas.is_empty()).then(|| MeanSe::from_samples(&omegas).mean),
            output: a.out.display().to_string(),
            passed: true,
        },
    )?;
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    dimension: &'static str,
    setting: String,
    mean_omega: f64,
    se: f64,
    n: usize,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    command: &'static str,
    base_config: &'a EstimateConfig,
    inputs: &'a Loaded,
    rows: &'a [SweepRow],
    stats: Vec<(String, EstimateStats)>,
    output: String,
    passed: bool,
}

fn default_settings(d: Dimension) -> Vec<String> {
    let s: &[&str] = match d {
        Dimension::Algorithm => &["tick", "quote", "clnv"],
        Dimension::Frequency => &["60", "300", "600", "1800"],
        Dimension::MinPrice => &["5", "0"],
    };
    s.iter().map(|x| x.to_string()).collect()
}

fn apply(base: &EstimateConfig, d: Dimension, setting: &str, days: &[DayInput]) -> Result<EstimateConfig> {
    let mut cfg = *base;
    let number =
        || setting.trim().parse::<f64>().map_err(|_| ConfigError(format!("sweep setting {setting:?} is not a number")));
    match d {
        Dimension::Algorithm => cfg.signing = algorithm(Some(setting), days)?,
        Dimension::Frequency => cfg.interval_ns = interval_ns(number()?)?,
        Dimension::MinPrice => {
            let v = number()?;
            if !(v >= 0.0) {
                bail!(ConfigError(format!("min price must be non-negative, got {v}")));
            }
            cfg.min_price = v;
        }
    }
    Ok(cfg)
}

pub fn run_sweep(a: &SweepArgs) -> Result<bool> {
    let loaded = load(&a.input)?;
    let base = config(&a.options, &loaded.days)?;
    let settings = if a.settings.is_empty() { default_settings(a.dimension) } else { a.settings.clone() };
    let name = match a.dimension {
        Dimension::Algorithm => "algorithm",
        Dimension::Frequency => "frequency",
        Dimension::MinPrice => "min_price",
    };
    let mut rows = Vec::with_capacity(settings.len());
    let mut all_stats = Vec::with_capacity(settings.len());
    for s in &settings {
        let cfg = apply(&base, a.dimension, s, &loaded.days)?;
        let (est, stats) = estimate_days(&loaded.days, &cfg)?;
        let omegas: Vec<f64> = est.iter().map(|e| e.omega_hat).collect();
        let MeanSe { mean, se, .. } = MeanSe::from_samples(&omegas);
        rows.push(SweepRow { dimension: name, setting: s.trim().to_string(), mean_omega: mean, se, n: omegas.len() });
        all_stats.push((s.trim().to_string(), stats));
    }
    let mut w = create(&a.out)?;
    {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(&mut w);
        wtr.write_record(["dimension", "setting", "mean_omega", "se", "n"])?;
        for r in &rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
    }
    w.flush()?;
    for r in &rows {
        eprintln!("{name} = {}: mean omega {:.6} (se {:.6}, n {})", r.setting, r.mean_omega, r.se, r.n);
    }
    write_json(
        &summary_path(&a.out),
        &SweepSummary {
            command: "sweep",
            base_config: &base,
            inputs: &loaded,
            rows: &rows,
            stats: all_stats,
            output: a.out.display().to_string(),
            passed: true,
        },
    )?;
    Ok(true)
}
