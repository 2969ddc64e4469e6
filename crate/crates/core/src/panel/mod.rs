//! Stock-day panels: aggregation, earnings event studies and fixed-effects
//! regressions.

mod aggregate;
mod characteristics;
mod events;
mod regression;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{log_decomposition, log_omega, winsorize, ScalingConstants, StockDayEstimate};

pub use aggregate::{aggregate_pct_mcap, write_series, AggregatePoint, Grouping};
pub use characteristics::{characteristics, BookEquity, CharacteristicValues, MonthlyRecord};
pub use events::{
    designate_earnings_day, earnings_event_study, write_event_study, Band, EarningsDesignation, EventPoint,
    EventStudyResult,
};
pub use regression::{
    demean, fe_regression, Clustering, FixedEffects, RegressionInput, RegressionResult, Term, MAX_DEMEAN_ITERATIONS,
};

/// One stock-day with its estimates and firm characteristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub symbol: String,
    pub date: NaiveDate,
    pub omega_hat: f64,
    pub omega_product: f64,
    pub lambda_scaled: f64,
    pub sigma_y_dollar: f64,
    pub negative_impact: bool,
    /// `log(omega_product / C')`, absent for non-positive impact.
    pub log_omega: Option<f64>,
    pub log_lambda: Option<f64>,
    pub log_sigma2: Option<f64>,
    /// Log market equity of the prior month.
    pub size: Option<f64>,
    pub beme: Option<f64>,
    pub momentum: Option<f64>,
    pub earnings: bool,
    /// Prior-month market equity in dollars.
    pub mcap: Option<f64>,
}

/// Characteristics CSV row: `symbol,date,size,beme,momentum,earnings,mcap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicsRow {
    pub symbol: String,
    pub date: NaiveDate,
    pub size: Option<f64>,
    pub beme: Option<f64>,
    pub momentum: Option<f64>,
    #[serde(deserialize_with = "flag")]
    pub earnings: bool,
    pub mcap: Option<f64>,
}

fn flag<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim() {
        "" | "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(serde::de::Error::custom(format!("earnings must be 0 or 1, got {other:?}"))),
    }
}

impl PanelRow {
    pub fn new(est: &StockDayEstimate, chars: Option<&CharacteristicsRow>, scaling: &ScalingConstants) -> Self {
        let logs = log_decomposition(est, scaling).ok();
        Self {
            symbol: est.symbol.clone(),
            date: est.date,
            omega_hat: est.omega_hat,
            omega_product: est.omega_product,
            lambda_scaled: est.lambda_scaled,
            sigma_y_dollar: est.sigma_y_dollar,
            negative_impact: est.negative_impact,
            log_omega: log_omega(est, scaling).ok(),
            log_lambda: logs.map(|l| l.0),
            log_sigma2: logs.map(|l| l.1),
            size: chars.and_then(|c| c.size),
            beme: chars.and_then(|c| c.beme),
            momentum: chars.and_then(|c| c.momentum),
            earnings: chars.is_some_and(|c| c.earnings),
            mcap: chars.and_then(|c| c.mcap),
        }
    }

    /// Named variable for regressions.
    pub fn var(&self, name: &str) -> Result<Option<f64>> {
        Ok(match name {
            "omega_hat" => Some(self.omega_hat),
            "omega_product" => Some(self.omega_product),
            "log_omega" => self.log_omega,
            "log_lambda" => self.log_lambda,
            "log_sigma2" => self.log_sigma2,
            "size" => self.size,
            "beme" => self.beme,
            "momentum" => self.momentum,
            "earnings" => Some(if self.earnings { 1.0 } else { 0.0 }),
            "mcap" => self.mcap,
            other => return Err(invalid(format!("unknown panel variable {other:?}"))),
        })
    }
}

pub const PANEL_VARIABLES: [&str; 10] = [
    "omega_hat",
    "omega_product",
    "log_omega",
    "log_lambda",
    "log_sigma2",
    "size",
    "beme",
    "momentum",
    "earnings",
    "mcap",
];

/// Joins estimates with characteristics by `(symbol, date)`. Estimates
/// without a characteristics row keep missing characteristics.
pub fn build_panel(
    estimates: &[StockDayEstimate],
    chars: &[CharacteristicsRow],
    scaling: &ScalingConstants,
) -> Vec<PanelRow> {
    let index: BTreeMap<(&str, NaiveDate), &CharacteristicsRow> =
        chars.iter().map(|c| ((c.symbol.as_str(), c.date), c)).collect();
    let mut rows: Vec<PanelRow> =
        estimates.iter().map(|e| PanelRow::new(e, index.get(&(e.symbol.as_str(), e.date)).copied(), scaling)).collect();
    rows.sort_by(|a, b| (&a.symbol, a.date).cmp(&(&b.symbol, b.date)));
    rows
}

pub fn read_characteristics<R: Read>(r: R) -> Result<Vec<CharacteristicsRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let rows: Vec<CharacteristicsRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    if rows.iter().any(|r| r.mcap.is_some_and(|m| !(m > 0.0))) {
        return Err(Error::Malformed("mcap must be positive when present".into()));
    }
    Ok(rows)
}

pub fn write_characteristics<W: Write>(w: W, rows: &[CharacteristicsRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["symbol", "date", "size", "beme", "momentum", "earnings", "mcap"])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in rows {
        wtr.write_record([
            r.symbol.clone(),
            r.date.to_string(),
            opt(r.size),
            opt(r.beme),
            opt(r.momentum),
            u8::from(r.earnings).to_string(),
            opt(r.mcap),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Regression over panel rows with every variable present. Continuous
/// variables are winsorized at `winsor` on the estimation sample; the
/// earnings indicator never is.
pub fn regress_panel(
    rows: &[PanelRow],
    depvar: &str,
    regressors: &[&str],
    fe: FixedEffects,
    clusters: Clustering,
    winsor: f64,
) -> Result<RegressionResult> {
    let names: Vec<&str> = std::iter::once(depvar).chain(regressors.iter().copied()).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut stock_keys = Vec::new();
    let mut day_keys = Vec::new();
    for r in rows {
        let vals = names.iter().map(|n| r.var(n)).collect::<Result<Vec<_>>>()?;
        if let Some(vals) = vals.into_iter().collect::<Option<Vec<f64>>>() {
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
            stock_keys.push(r.symbol.as_str());
            day_keys.push(r.date);
        }
    }
    if stock_keys.is_empty() {
        return Err(Error::InsufficientData(format!("no rows with {} present", names.join(", "))));
    }
    for (c, n) in cols.iter_mut().zip(&names) {
        if *n != "earnings" {
            *c = winsorize(c, winsor)?;
        }
    }
    let y = cols.remove(0);
    let input = RegressionInput {
        y,
        regressors: regressors.iter().map(|n| n.to_string()).zip(cols).collect(),
        stock: dense(&stock_keys),
        day: dense(&day_keys),
    };
    fe_regression(&input, fe, clusters)
}

fn dense<K: Ord + Copy>(keys: &[K]) -> Vec<usize> {
    let map: BTreeMap<K, usize> = {
        let mut sorted: Vec<K> = keys.to_vec();
        sorted.sort();
        sorted.dedup();
        sorted.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
    };
    keys.iter().map(|k| map[k]).collect()
}

/// Regression table rows: `term,coef,se,stars,r2,within_r2,n`.
pub fn write_regression<W: Write>(w: W, result: &RegressionResult) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["term", "coef", "se", "stars", "r2", "within_r2", "n"])?;
    for t in &result.terms {
        wtr.write_record([
            t.name.clone(),
            t.coef.to_string(),
            t.se.to_string(),
            t.stars().to_string(),
            result.r2.to_string(),
            result.within_r2.to_string(),
            result.n_obs.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(symbol: &str, day: u32, lambda: f64) -> StockDayEstimate {
        StockDayEstimate {
            symbol: symbol.into(),
            date: NaiveDate::from_ymd_opt(2024, 1, day).unwrap(),
            omega_hat: 5.0,
            lambda_hat: lambda,
            lambda_scaled: lambda,
            sigma_y2_hat: 4.0,
            omega_product: lambda * 4e6,
            n_bars: 390,
            negative_impact: lambda <= 0.0,
            sigma_y_dollar: 2.0,
            p_prev_close: 10.0,
            flow_correlation: 0.2,
        }
    }

    #[test]
    fn join_and_logs() {
        let chars = read_characteristics(
            "symbol,date,size,beme,momentum,earnings,mcap\nA,2024-01-02,7.0,0.5,,1,1000\n".as_bytes(),
        )
        .unwrap();
        let panel = build_panel(&[est("A", 2, 0.5), est("A", 3, -0.1)], &chars, &ScalingConstants::default());
        assert_eq!(panel[0].size, Some(7.0));
        assert_eq!(panel[0].momentum, None);
        assert!(panel[0].earnings);
        let lo = panel[0].log_omega.unwrap();
        let parts = panel[0].log_lambda.unwrap() + panel[0].log_sigma2.unwrap();
        assert!((lo - parts).abs() < 1e-12);
        assert_eq!(panel[1].log_omega, None);
        assert!(!panel[1].earnings);
        assert!(panel[0].var("nope").is_err());
    }

    #[test]
    fn characteristics_csv_round_trip() {
        let rows = vec![CharacteristicsRow {
            symbol: "A".into(),
            date: NaiveDate::from_ymd_opt(2024, 1, 2).unwrap(),
            size: Some(1.5),
            beme: None,
            momentum: Some(-0.2),
            earnings: true,
            mcap: Some(3e9),
        }];
        let mut buf = Vec::new();
        write_characteristics(&mut buf, &rows).unwrap();
        assert_eq!(read_characteristics(buf.as_slice()).unwrap(), rows);
        assert!(read_characteristics("symbol,date,size,beme,momentum,earnings,mcap\nA,2024-01-02,,,,2,\n".as_bytes())
            .is_err());
    }
}
