//! Batch estimation over stock-days: sign, bin, estimate.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    flow_correlation, lambda_hat, lambda_return, omega_hat, omega_product, scaled_flow_vol, scaled_impact,
    sigma_y2_hat, LambdaSpec, ScalingConstants, StockDayEstimate,
};
use crate::error::{Error, Result};
use crate::microdata::io::{DayTrades, StockDay};
use crate::microdata::{
    build_bars, build_bars_midpoint, sign_trades, BarMeta, BarPrice, BarSeries, QuoteEvent, SessionBounds, Side,
    SigningAlgorithm, SigningConfig, TickEvent,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub interval_ns: i64,
    /// Session window; `open_price` is overridden per day.
    pub session: SessionBounds,
    pub signing: SigningAlgorithm,
    pub signing_cfg: SigningConfig,
    pub bar_price: BarPrice,
    pub lambda: LambdaSpec,
    pub scaling: ScalingConstants,
    /// Days whose prior close is below this are dropped; 0 keeps all.
    pub min_price: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            interval_ns: 60_000_000_000,
            session: SessionBounds::regular(),
            signing: SigningAlgorithm::Tick,
            signing_cfg: SigningConfig::default(),
            bar_price: BarPrice::LastTrade,
            lambda: LambdaSpec::default(),
            scaling: ScalingConstants::default(),
            min_price: 5.0,
        }
    }
}

/// Everything needed to estimate one stock-day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayInput {
    pub symbol: String,
    pub date: NaiveDate,
    pub ticks: Vec<TickEvent>,
    pub quotes: Vec<QuoteEvent>,
    pub sides: Option<Vec<Side>>,
    pub p_prev_close: f64,
    pub open_price: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateStats {
    pub days: usize,
    pub estimated: usize,
    pub below_min_price: usize,
    /// Days without order flow, where the impact slope is undefined.
    pub undefined_slope: usize,
    pub negative_impact: usize,
}

/// Estimates from ready-made bars.
pub fn estimate_bars(bars: &BarSeries, cfg: &EstimateConfig) -> Result<StockDayEstimate> {
    let t = cfg.scaling.t;
    let p0 = bars.p_prev_close;
    let omega = omega_hat(bars, t)?;
    let lambda = lambda_hat(bars, cfg.lambda)?;
    let lambda_ret = lambda_return(lambda, cfg.lambda.kind, p0);
    let sigma_y2 = sigma_y2_hat(bars, t)?;
    Ok(StockDayEstimate {
        symbol: bars.symbol.clone(),
        date: bars.date,
        omega_hat: omega,
        lambda_hat: lambda,
        lambda_scaled: scaled_impact(lambda_ret, p0, &cfg.scaling),
        sigma_y2_hat: sigma_y2,
        omega_product: omega_product(lambda_ret * p0, sigma_y2, t),
        n_bars: bars.n_bars(),
        negative_impact: lambda <= 0.0,
        sigma_y_dollar: scaled_flow_vol(sigma_y2, p0, &cfg.scaling),
        p_prev_close: p0,
        flow_correlation: flow_correlation(bars),
    })
}

/// Signs and bins one day.
pub fn day_bars(day: &DayInput, cfg: &EstimateConfig) -> Result<BarSeries> {
    let signed = sign_trades(cfg.signing, &day.ticks, &day.quotes, day.sides.as_deref(), &cfg.signing_cfg)?;
    let bounds = SessionBounds { open_price: day.open_price, ..cfg.session };
    let meta = BarMeta { symbol: &day.symbol, date: day.date, p_prev_close: day.p_prev_close };
    match cfg.bar_price {
        BarPrice::LastTrade => build_bars(&signed, cfg.interval_ns, &bounds, &meta),
        BarPrice::Midpoint => build_bars_midpoint(&signed, &day.quotes, cfg.interval_ns, &bounds, &meta),
    }
}

/// Estimates every day in input order. Days below the price floor or
/// without order flow are skipped and counted; other errors abort.
pub fn estimate_days(days: &[DayInput], cfg: &EstimateConfig) -> Result<(Vec<StockDayEstimate>, EstimateStats)> {
    cfg.scaling.validate()?;
    let results: Vec<Result<Option<StockDayEstimate>>> = days
        .par_iter()
        .map(|d| {
            if d.p_prev_close < cfg.min_price {
                return Ok(None);
            }
            match estimate_bars(&day_bars(d, cfg)?, cfg) {
                Ok(e) => Ok(Some(e)),
                Err(Error::UndefinedSlope(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut stats = EstimateStats { days: days.len(), ..EstimateStats::default() };
    let mut out = Vec::new();
    for (d, r) in days.iter().zip(results) {
        match r? {
            Some(e) => {
                stats.negative_impact += usize::from(e.negative_impact);
                out.push(e);
            }
            None if d.p_prev_close < cfg.min_price => stats.below_min_price += 1,
            None => stats.undefined_slope += 1,
        }
    }
    stats.estimated = out.len();
    Ok((out, stats))
}

/// Joins trades, quotes and prior closes into day inputs.
///
/// The prior close comes from `closes`, else the symbol's last trade on the
/// previous date present in `trades`, else the day's first trade.
pub fn assemble_days(
    trades: BTreeMap<StockDay, DayTrades>,
    mut quotes: BTreeMap<StockDay, Vec<QuoteEvent>>,
    closes: &BTreeMap<StockDay, f64>,
) -> Vec<DayInput> {
    let mut out = Vec::with_capacity(trades.len());
    let mut last_close: Option<(String, f64)> = None;
    for ((symbol, date), day) in trades {
        let key = (symbol, date);
        let carried = last_close.as_ref().filter(|(s, _)| *s == key.0).map(|(_, p)| *p);
        let p_prev_close =
            closes.get(&key).copied().or(carried).or_else(|| day.ticks.first().map(|t| t.price)).unwrap_or(f64::NAN);
        if let Some(t) = day.ticks.last() {
            last_close = Some((key.0.clone(), t.price));
        }
        let q = quotes.remove(&key).unwrap_or_default();
        out.push(DayInput {
            symbol: key.0,
            date: key.1,
            ticks: day.ticks,
            quotes: q,
            sides: day.sides,
            p_prev_close,
            open_price: None,
        });
    }
    out
}

pub fn write_estimates<W: Write>(w: W, rows: &[StockDayEstimate]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wtr.write_record(ESTIMATE_COLUMNS)?;
    }
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub const ESTIMATE_COLUMNS: [&str; 12] = [
    "symbol",
    "date",
    "omega_hat",
    "lambda_hat",
    "lambda_scaled",
    "sigma_y2_hat",
    "omega_product",
    "n_bars",
    "negative_impact",
    "sigma_y_dollar",
    "p_prev_close",
    "flow_correlation",
];

pub fn read_estimates<R: Read>(r: R) -> Result<Vec<StockDayEstimate>> {
    Ok(csv::Reader::from_reader(r).deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microdata::synthetic::{tape_step_ns, tape_trades};
    use crate::sim::tape::tape_rows;
    use crate::sim::{simulate_kyle, SimParams};

    fn sim_day(path: usize, p_prev_close: f64) -> DayInput {
        let p = SimParams::kyle(1.0, 1.0).with_steps(390).with_paths(8);
        let rows = tape_rows(&simulate_kyle(&p, path).unwrap());
        let (trades, bounds) = tape_trades(&rows).unwrap();
        DayInput {
            symbol: format!("S{path}"),
            date: NaiveDate::from_ymd_opt(2024, 1, 2).unwrap(),
            ticks: trades.iter().map(|t| t.tick()).collect(),
            quotes: vec![],
            sides: Some(trades.iter().map(|t| t.side).collect()),
            p_prev_close,
            open_price: bounds.open_price,
        }
    }

    fn cfg() -> EstimateConfig {
        EstimateConfig {
            interval_ns: tape_step_ns(390).unwrap(),
            signing: SigningAlgorithm::Given,
            lambda: LambdaSpec::levels(),
            scaling: ScalingConstants { t: 1.0, ..ScalingConstants::default() },
            ..EstimateConfig::default()
        }
    }

    #[test]
    fn simulated_day_matches_the_session() {
        let p = SimParams::kyle(1.0, 1.0).with_steps(390).with_paths(8);
        let s = simulate_kyle(&p, 3).unwrap();
        let (est, stats) = estimate_days(&[sim_day(3, 100.0)], &cfg()).unwrap();
        assert_eq!(stats.estimated, 1);
        let direct: f64 = s.dp().iter().zip(s.dy()).map(|(a, b)| a * b).sum();
        assert!((est[0].omega_hat - direct).abs() < 1e-9);
        // sigma_w = 0: the levels slope is lambda exactly
        assert!((est[0].lambda_hat - 1.0).abs() < 1e-9);
        assert!((est[0].omega_product - est[0].sigma_y2_hat).abs() < 1e-6);
    }

    #[test]
    fn skips_are_counted() {
        let mut quiet = sim_day(1, 100.0);
        quiet.ticks.clear();
        quiet.sides = Some(vec![]);
        let days = [sim_day(0, 100.0), sim_day(2, 4.0), quiet];
        let (est, stats) = estimate_days(&days, &cfg()).unwrap();
        assert_eq!(est.len(), 1);
        assert_eq!((stats.below_min_price, stats.undefined_slope), (1, 1));
    }

    #[test]
    fn csv_round_trip() {
        let (est, _) = estimate_days(&[sim_day(0, 100.0), sim_day(1, 100.0)], &cfg()).unwrap();
        let mut buf = Vec::new();
        write_estimates(&mut buf, &est).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&ESTIMATE_COLUMNS.join(",")));
        assert_eq!(read_estimates(buf.as_slice()).unwrap(), est);
    }

    #[test]
    fn prior_close_fallbacks() {
        let d1 = NaiveDate::from_ymd_opt(2024, 1, 2).unwrap();
        let d2 = NaiveDate::from_ymd_opt(2024, 1, 3).unwrap();
        let day = |p: f64| DayTrades {
            ticks: vec![TickEvent::new(crate::REGULAR_OPEN_NS + 1, p, 1.0).unwrap()],
            sides: None,
        };
        let mut trades = BTreeMap::new();
        trades.insert(("A".to_string(), d1), day(10.0));
        trades.insert(("A".to_string(), d2), day(11.0));
        trades.insert(("B".to_string(), d2), day(20.0));
        let mut closes = BTreeMap::new();
        closes.insert(("A".to_string(), d1), 9.0);
        let days = assemble_days(trades, BTreeMap::new(), &closes);
        let got: Vec<f64> = days.iter().map(|d| d.p_prev_close).collect();
        assert_eq!(got, vec![9.0, 10.0, 20.0]);
    }
}
