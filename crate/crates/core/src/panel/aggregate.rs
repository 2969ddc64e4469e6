use std::collections::BTreeMap;
use std::io::Write;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::PanelRow;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grouping {
    Day,
    Month,
}

impl std::str::FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day" => Ok(Grouping::Day),
            "month" => Ok(Grouping::Month),
            other => Err(invalid(format!("grouping must be day or month, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    /// `YYYY-MM-DD` or `YYYY-MM`.
    pub period: String,
    pub omega: f64,
    pub mcap: f64,
    /// `100 * omega / mcap`.
    pub pct_mcap: f64,
    pub n: usize,
}

/// Per period, total value of information over total prior-month market
/// capitalisation, in percent. Rows without `mcap` are left out; negative
/// estimates are kept.
pub fn aggregate_pct_mcap(rows: &[PanelRow], grouping: Grouping) -> Result<Vec<AggregatePoint>> {
    let mut acc: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
    for r in rows {
        let Some(m) = r.mcap else { continue };
        let key = match grouping {
            Grouping::Day => r.date.to_string(),
            Grouping::Month => format!("{:04}-{:02}", r.date.year(), r.date.month()),
        };
        let e = acc.entry(key).or_insert((0.0, 0.0, 0));
        e.0 += r.omega_hat;
        e.1 += m;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(period, (omega, mcap, n))| {
            if mcap <= 0.0 {
                return Err(Error::InsufficientData(format!("zero market capitalisation in {period}")));
            }
            Ok(AggregatePoint { pct_mcap: 100.0 * omega / mcap, period, omega, mcap, n })
        })
        .collect()
}

pub fn write_series<W: Write>(w: W, points: &[AggregatePoint]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if points.is_empty() {
        wtr.write_record(["period", "omega", "mcap", "pct_mcap", "n"])?;
    }
    for p in points {
        wtr.serialize(p)?;
    }
    wtr.flush()?;
    Ok(())
}
