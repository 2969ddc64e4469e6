use std::fmt;

use serde::{Deserialize, Serialize};

use super::fees::{fee_gap, fee_table, summarize_fees, FeeSourceSummary};
use super::{concentration_value, entropy_to_cv, risk_adjusted_bound, SdfSpec};
use crate::error::{invalid, Result};

/// Calibration inputs, all in percent of market capitalisation except the
/// multiplier and the day fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PuzzleInputs {
    pub omega_pct: f64,
    /// Standard deviation of the yearly value, percent of market cap.
    pub sigma_omega_pct: f64,
    pub fee_active: f64,
    pub fee_passive: f64,
    /// Aggregate fees paid for active management, percent of market cap.
    pub fee_benchmark: f64,
    pub earnings_multiplier: f64,
    pub earnings_day_fraction: f64,
}

impl Default for PuzzleInputs {
    fn default() -> Self {
        Self {
            omega_pct: 0.04,
            sigma_omega_pct: 0.03,
            fee_active: 0.64,
            fee_passive: 0.05,
            fee_benchmark: 0.67,
            earnings_multiplier: 3.57,
            earnings_day_fraction: 0.01,
        }
    }
}

impl PuzzleInputs {
    fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_pct", self.omega_pct),
            ("sigma_omega_pct", self.sigma_omega_pct),
            ("fee_active", self.fee_active),
            ("fee_passive", self.fee_passive),
            ("fee_benchmark", self.fee_benchmark),
            ("earnings_multiplier", self.earnings_multiplier),
            ("earnings_day_fraction", self.earnings_day_fraction),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuzzleReport {
    pub inputs: PuzzleInputs,
    pub entropy: f64,
    pub sdf_cv: f64,
    pub risk_adjustment: f64,
    pub bound: f64,
    /// The bound rounded to two decimals, as usually quoted.
    pub bound_rounded: f64,
    pub concentration_selective: f64,
    pub concentration_all_days: f64,
    pub fee_gap: f64,
    pub fee_sources: Vec<FeeSourceSummary>,
    /// `fee_benchmark / bound`.
    pub gap_factor: f64,
    /// Fees exceed even the risk-adjusted bound.
    pub puzzle: bool,
    pub bound_below_fee_gap: bool,
}

pub fn puzzle_report(inputs: PuzzleInputs, sdf: SdfSpec) -> Result<PuzzleReport> {
    inputs.validate()?;
    let cv = entropy_to_cv(sdf.entropy)?;
    let bound = risk_adjusted_bound(inputs.omega_pct, inputs.sigma_omega_pct, sdf.entropy)?;
    let gap = fee_gap(inputs.fee_active, inputs.fee_passive)?;
    Ok(PuzzleReport {
        inputs,
        entropy: sdf.entropy,
        sdf_cv: cv,
        risk_adjustment: bound - inputs.omega_pct,
        bound,
        bound_rounded: (bound * 100.0).round() / 100.0,
        concentration_selective: concentration_value(
            inputs.omega_pct,
            inputs.earnings_multiplier,
            inputs.earnings_day_fraction,
        )?,
        concentration_all_days: concentration_value(inputs.omega_pct, inputs.earnings_multiplier, 1.0)?,
        fee_gap: gap,
        fee_sources: summarize_fees(&fee_table()),
        gap_factor: inputs.fee_benchmark / bound,
        puzzle: bound < inputs.fee_benchmark,
        bound_below_fee_gap: bound < gap,
    })
}

impl PuzzleReport {
    pub fn verdict(&self) -> String {
        if self.puzzle {
            format!("bound {:.2} < fees {:.2}", self.bound_rounded, self.inputs.fee_benchmark)
        } else {
            "no puzzle".to_string()
        }
    }

    /// Flat `key,value` rows.
    pub fn csv_rows(&self) -> Vec<(String, String)> {
        let mut rows: Vec<(String, String)> = vec![
            ("omega_pct".into(), self.inputs.omega_pct.to_string()),
            ("sigma_omega_pct".into(), self.inputs.sigma_omega_pct.to_string()),
            ("entropy".into(), self.entropy.to_string()),
            ("sdf_cv".into(), self.sdf_cv.to_string()),
            ("risk_adjustment".into(), self.risk_adjustment.to_string()),
            ("bound".into(), self.bound.to_string()),
            ("bound_rounded".into(), self.bound_rounded.to_string()),
            ("fee_benchmark".into(), self.inputs.fee_benchmark.to_string()),
            ("gap_factor".into(), self.gap_factor.to_string()),
            ("fee_active".into(), self.inputs.fee_active.to_string()),
            ("fee_passive".into(), self.inputs.fee_passive.to_string()),
            ("fee_gap".into(), self.fee_gap.to_string()),
            ("concentration_selective".into(), self.concentration_selective.to_string()),
            ("concentration_all_days".into(), self.concentration_all_days.to_string()),
            ("puzzle".into(), self.puzzle.to_string()),
            ("bound_below_fee_gap".into(), self.bound_below_fee_gap.to_string()),
        ];
        for s in &self.fee_sources {
            rows.push((format!("mean_diff_{}", s.source), s.mean_diff.to_string()));
        }
        rows
    }
}

impl fmt::Display for PuzzleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = &self.inputs;
        writeln!(f, "value of information        {:.4}% of market cap", i.omega_pct)?;
        writeln!(f, "sd of yearly value          {:.4}%", i.sigma_omega_pct)?;
        writeln!(f, "SDF entropy                 {:.4} (cv {:.4})", self.entropy, self.sdf_cv)?;
        writeln!(
            f,
            "risk-adjusted bound         {:.4} + {:.4} x {:.4} = {:.4}% (~{:.2}%)",
            i.omega_pct, i.sigma_omega_pct, self.sdf_cv, self.bound, self.bound_rounded
        )?;
        writeln!(
            f,
            "earnings days only          {:.4} x {:.2} x {:.2} = {:.4}%",
            i.earnings_day_fraction, i.earnings_multiplier, i.omega_pct, self.concentration_selective
        )?;
        writeln!(
            f,
            "every day at earnings rate  {:.2} x {:.2} = {:.4}%",
            i.omega_pct, i.earnings_multiplier, self.concentration_all_days
        )?;
        writeln!(f, "active - passive fee        {:.2} - {:.2} = {:.2} pp", i.fee_active, i.fee_passive, self.fee_gap)?;
        for s in &self.fee_sources {
            writeln!(f, "  {:<18} mean diff {:.2}, {} gap {:.2}", s.source, s.mean_diff, s.latest_year, s.latest_gap)?;
        }
        writeln!(f, "aggregate fees              {:.2}% (x{:.2} the bound)", i.fee_benchmark, self.gap_factor)?;
        write!(f, "verdict                     {}", self.verdict())
    }
}
