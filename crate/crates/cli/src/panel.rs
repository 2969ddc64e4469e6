use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use infoval_core::estimators::{read_estimates, ScalingConstants};
use infoval_core::panel::{
    aggregate_pct_mcap, build_panel, earnings_event_study, read_characteristics, regress_panel, write_event_study,
    write_regression, write_series, FixedEffects, Grouping, PanelRow, PANEL_VARIABLES,
};

use crate::output::{create, open, summary_path, with_suffix, write_json};
use crate::ConfigError;

#[derive(Args, Debug)]
pub struct PanelInput {
    /// Per stock-day estimates written by `estimate`
    #[arg(long)]
    estimates: PathBuf,
    /// Characteristics CSV: symbol,date,size,beme,momentum,earnings,mcap
    #[arg(long)]
    characteristics: Option<PathBuf>,
    /// Dollar scale used to build the log decomposition
    #[arg(long, default_value_t = 1e6)]
    scale: f64,
    /// Price-level deflator applied to the scale
    #[arg(long, default_value_t = 1.0)]
    cpi_factor: f64,
}

fn load(p: &PanelInput) -> Result<(Vec<PanelRow>, ScalingConstants)> {
    let scaling = ScalingConstants { c: p.scale, cpi_factor: p.cpi_factor, ..ScalingConstants::default() };
    scaling.validate()?;
    let est = read_estimates(open(&p.estimates)?).with_context(|| format!("reading {}", p.estimates.display()))?;
    let chars = match &p.characteristics {
        Some(path) => read_characteristics(open(path)?).with_context(|| format!("reading {}", path.display()))?,
        None => Vec::new(),
    };
    Ok((build_panel(&est, &chars, &scaling), scaling))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> infoval_core::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct PanelArgs {
    #[command(flatten)]
    input: PanelInput,
    /// Aggregate per day or per month
    #[arg(long, default_value = "day")]
    grouping: Grouping,
    /// Output CSV: period,omega,mcap,pct_mcap,n
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct PanelSummary {
    command: &'static str,
    rows: usize,
    periods: usize,
    mean_pct_mcap: Option<f64>,
    output: String,
    passed: bool,
}

pub fn run_panel(a: &PanelArgs) -> Result<bool> {
    if a.input.characteristics.is_none() {
        bail!(ConfigError("panel needs --characteristics for market caps".into()));
    }
    let (rows, _) = load(&a.input)?;
    let points = aggregate_pct_mcap(&rows, a.grouping)?;
    write_with(&a.out, |w| write_series(w, &points))?;
    let mean = (!points.is_empty()).then(|| points.iter().map(|p| p.pct_mcap).sum::<f64>() / points.len() as f64);
    write_json(
        &summary_path(&a.out),
        &PanelSummary {
            command: "panel",
            rows: rows.len(),
            periods: points.len(),
            mean_pct_mcap: mean,
            output: a.out.display().to_string(),
            passed: true,
        },
    )?;
    Ok(true)
}

#[derive(Args, Debug)]
pub struct EventStudyArgs {
    #[command(flatten)]
    input: PanelInput,
    /// Trading days either side of the event
    #[arg(long, default_value_t = 22)]
    window: usize,
    /// Output CSV for the log value of information; the impact and flow
    /// components go to `<stem>_log_lambda` and `<stem>_log_sigma2`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct EventSummary {
    command: &'static str,
    window: usize,
    events: usize,
    day0_excess: Option<f64>,
    day0_se: Option<f64>,
    outputs: Vec<String>,
    passed: bool,
}

pub fn run_event_study(a: &EventStudyArgs) -> Result<bool> {
    if a.input.characteristics.is_none() {
        bail!(ConfigError("event-study needs --characteristics for earnings days".into()));
    }
    let (rows, _) = load(&a.input)?;
    let result = earnings_event_study(&rows, a.window);
    let mut outputs = Vec::new();
    for (var, path) in [
        ("log_omega", a.out.clone()),
        ("log_lambda", with_suffix(&a.out, "log_lambda")),
        ("log_sigma2", with_suffix(&a.out, "log_sigma2")),
    ] {
        write_with(&path, |w| write_event_study(w, &result, var))?;
        outputs.push(path.display().to_string());
    }
    let excess = result.day0_excess();
    eprintln!("{} events", result.n_events);
    if let Some((d, se)) = excess {
        eprintln!("day-0 excess log value of information {d:.4} (se {se:.4})");
    }
    write_json(
        &summary_path(&a.out),
        &EventSummary {
            command: "event-study",
            window: a.window,
            events: result.n_events,
            day0_excess: excess.map(|e| e.0),
            day0_se: excess.map(|e| e.1),
            outputs,
            passed: true,
        },
    )?;
    Ok(true)
}

/// `none`, `stock`, `day`, `stock,day` / `both`.
pub fn parse_effects(s: &str) -> std::result::Result<FixedEffects, String> {
    let mut fe = FixedEffects::NONE;
    for part in s.split([',', '+']).map(str::trim) {
        match part {
            "none" | "" => {}
            "stock" => fe.stock = true,
            "day" => fe.day = true,
            "both" => fe = FixedEffects::BOTH,
            other => return Err(format!("expected none, stock, day or both, got {other:?}")),
        }
    }
    Ok(fe)
}

#[derive(Args, Debug)]
pub struct RegressArgs {
    #[command(flatten)]
    input: PanelInput,
    /// Dependent variable
    #[arg(long, default_value = "log_omega")]
    depvar: String,
    /// Comma-separated regressors
    #[arg(long, value_delimiter = ',', default_value = "size,beme,earnings")]
    regressors: Vec<String>,
    /// Absorbed fixed effects
    #[arg(long, default_value = "stock,day", value_parser = parse_effects)]
    fe: FixedEffects,
    /// Cluster dimensions of the standard errors
    #[arg(long, default_value = "stock,day", value_parser = parse_effects)]
    cluster: FixedEffects,
    /// Two-sided winsorization fraction for continuous variables
    #[arg(long, default_value_t = 0.01)]
    winsor: f64,
    /// Output CSV: term,coef,se,stars,r2,within_r2,n
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct RegressSummary<'a> {
    command: &'static str,
    depvar: &'a str,
    fixed_effects: String,
    clusters: String,
    winsor: f64,
    result: &'a infoval_core::RegressionResult,
    output: String,
    passed: bool,
}

pub fn run_regress(a: &RegressArgs) -> Result<bool> {
    for v in std::iter::once(&a.depvar).chain(&a.regressors) {
        if !PANEL_VARIABLES.contains(&v.as_str()) {
            bail!(ConfigError(format!("unknown variable {v:?}; expected one of {}", PANEL_VARIABLES.join(", "))));
        }
    }
    if !(0.0..0.5).contains(&a.winsor) {
        bail!(ConfigError(format!("--winsor must be in [0, 0.5), got {}", a.winsor)));
    }
    let (rows, _) = load(&a.input)?;
    let regressors: Vec<&str> = a.regressors.iter().map(String::as_str).collect();
    let result = regress_panel(&rows, &a.depvar, &regressors, a.fe, a.cluster, a.winsor)?;
    write_with(&a.out, |w| write_regression(w, &result))?;
    for t in &result.terms {
        eprintln!("{:<12} {:>12.6} ({:.6}){}", t.name, t.coef, t.se, t.stars());
    }
    write_json(
        &summary_path(&a.out),
        &RegressSummary {
            command: "regress",
            depvar: &a.depvar,
            fixed_effects: a.fe.to_string(),
            clusters: a.cluster.to_string(),
            winsor: a.winsor,
            result: &result,
            output: a.out.display().to_string(),
            passed: true,
        },
    )?;
    Ok(true)
}
