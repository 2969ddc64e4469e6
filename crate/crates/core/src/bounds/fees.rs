use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const FEE_TABLE_CSV: &str = include_str!("../../data/fee_table.csv");

/// Asset-weighted expense ratios of active and passive equity funds, in
/// percent of assets under management.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeRow {
    pub source: String,
    pub year: u16,
    pub active: f64,
    pub passive: f64,
    pub diff: f64,
}

/// Active minus passive fee, in percentage points.
pub fn fee_gap(fee_active: f64, fee_passive: f64) -> Result<f64> {
    if !(fee_active >= 0.0 && fee_passive >= 0.0) {
        return Err(invalid("fees must be non-negative"));
    }
    Ok(fee_active - fee_passive)
}

/// The packaged fee table (Morningstar, ICI mutual funds, ICI ETFs).
pub fn fee_table() -> Vec<FeeRow> {
    csv::Reader::from_reader(FEE_TABLE_CSV.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .expect("packaged fee table is well-formed")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeSourceSummary {
    pub source: String,
    pub mean_active: f64,
    pub mean_passive: f64,
    pub mean_diff: f64,
    pub latest_year: u16,
    pub latest_gap: f64,
}

/// Per-source means and latest gap, in table order.
pub fn summarize_fees(rows: &[FeeRow]) -> Vec<FeeSourceSummary> {
    let mut sources: Vec<&str> = Vec::new();
    for r in rows {
        if !sources.contains(&r.source.as_str()) {
            sources.push(&r.source);
        }
    }
    sources
        .into_iter()
        .map(|src| {
            let group: Vec<&FeeRow> = rows.iter().filter(|r| r.source == src).collect();
            let n = group.len() as f64;
            let latest = group.iter().max_by_key(|r| r.year).expect("non-empty group");
            FeeSourceSummary {
                source: src.to_string(),
                mean_active: group.iter().map(|r| r.active).sum::<f64>() / n,
                mean_passive: group.iter().map(|r| r.passive).sum::<f64>() / n,
                mean_diff: group.iter().map(|r| r.diff).sum::<f64>() / n,
                latest_year: latest.year,
                latest_gap: latest.active - latest.passive,
            }
        })
        .collect()
}
