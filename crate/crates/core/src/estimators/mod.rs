//! Per stock-day value of information, price impact and flow variance.
//!
//! Internal units are dollars and shares. Conversion to real millions of
//! dollars happens only through [`ScalingConstants`] at reporting time.

mod pipeline;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::microdata::BarSeries;
use crate::stats::{compensated_sum, correlation, quantile_sorted, sample_variance};

pub use pipeline::{
    assemble_days, day_bars, estimate_bars, estimate_days, read_estimates, write_estimates, DayInput, EstimateConfig,
    EstimateStats, ESTIMATE_COLUMNS,
};

/// Dollar-to-millions conversion, CPI deflator and the day's year fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    /// Nominal dollars per million.
    pub c: f64,
    /// Multiplier from nominal to base-period dollars.
    pub cpi_factor: f64,
    /// Year fraction of one trading day.
    pub t: f64,
}

impl Default for ScalingConstants {
    fn default() -> Self {
        Self { c: 1e6, cpi_factor: 1.0, t: 1.0 / crate::TRADING_DAYS_PER_YEAR }
    }
}

impl ScalingConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C", self.c), ("cpi_factor", self.cpi_factor), ("T", self.t)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Nominal dollars per real million.
    pub fn effective_c(&self) -> f64 {
        self.c / self.cpi_factor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockDayEstimate {
    pub symbol: String,
    pub date: chrono::NaiveDate,
    /// Dollars per year.
    pub omega_hat: f64,
    /// Raw regression slope (return per share for log returns).
    pub lambda_hat: f64,
    /// Return per real million dollars of order flow.
    pub lambda_scaled: f64,
    /// Shares squared per year.
    pub sigma_y2_hat: f64,
    /// Dollars per year.
    pub omega_product: f64,
    pub n_bars: usize,
    pub negative_impact: bool,
    /// Real millions of dollars per square-root year.
    pub sigma_y_dollar: f64,
    pub p_prev_close: f64,
    /// Per-day correlation of bar price changes and flow.
    pub flow_correlation: f64,
}

/// Which regression measures price impact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaKind {
    /// Log returns on signed shares: return per share.
    LogReturn,
    /// Price changes on signed shares: dollars per share.
    Levels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaSpec {
    pub kind: LambdaKind,
    pub intercept: bool,
}

impl Default for LambdaSpec {
    fn default() -> Self {
        Self { kind: LambdaKind::LogReturn, intercept: false }
    }
}

impl LambdaSpec {
    pub fn levels() -> Self {
        Self { kind: LambdaKind::Levels, intercept: false }
    }
}

fn non_empty(bars: &BarSeries, min: usize) -> Result<()> {
    if bars.n_bars() < min {
        return Err(Error::InsufficientData(format!(
            "{} {}: {} bars, need {min}",
            bars.symbol,
            bars.date,
            bars.n_bars()
        )));
    }
    Ok(())
}

/// `(1/T) sum dP dY`.
pub fn omega_hat(bars: &BarSeries, t: f64) -> Result<f64> {
    non_empty(bars, 1)?;
    if !(t > 0.0) {
        return Err(invalid("T must be positive"));
    }
    Ok(compensated_sum(bars.dp.iter().zip(&bars.dy).map(|(p, y)| p * y)) / t)
}

/// Least-squares slope of `y` on `x`, through the origin unless `intercept`.
pub fn slope(y: &[f64], x: &[f64], intercept: bool) -> Result<f64> {
    let (mx, my) = if intercept { (crate::stats::mean(x), crate::stats::mean(y)) } else { (0.0, 0.0) };
    let sxx = compensated_sum(x.iter().map(|a| (a - mx) * (a - mx)));
    if sxx == 0.0 {
        return Err(Error::UndefinedSlope("regressor has no variation".into()));
    }
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    Ok(sxy / sxx)
}

/// Per-bar returns under `kind`: log price ratios or price changes.
pub fn bar_returns(bars: &BarSeries, kind: LambdaKind) -> Result<Vec<f64>> {
    match kind {
        LambdaKind::Levels => Ok(bars.dp.clone()),
        LambdaKind::LogReturn => {
            let levels: Vec<f64> = bars.levels().collect();
            if levels.iter().any(|p| !(*p > 0.0)) {
                return Err(invalid("log returns need positive prices"));
            }
            Ok(levels.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
        }
    }
}

/// Price-impact slope of per-bar returns on signed share flow.
pub fn lambda_hat(bars: &BarSeries, spec: LambdaSpec) -> Result<f64> {
    non_empty(bars, 2)?;
    if bars.dy.iter().all(|y| *y == 0.0) {
        return Err(Error::UndefinedSlope(format!("{} {}: no order flow", bars.symbol, bars.date)));
    }
    slope(&bar_returns(bars, spec.kind)?, &bars.dy, spec.intercept)
}

/// Return impact per share; levels slopes are divided by `p0`.
pub fn lambda_return(lambda: f64, kind: LambdaKind, p0: f64) -> f64 {
    match kind {
        LambdaKind::LogReturn => lambda,
        LambdaKind::Levels => lambda / p0,
    }
}

/// Annualised flow variance: sample variance of per-bar flow times `N / T`.
pub fn sigma_y2_hat(bars: &BarSeries, t: f64) -> Result<f64> {
    non_empty(bars, 2)?;
    if !(t > 0.0) {
        return Err(invalid("T must be positive"));
    }
    Ok(sample_variance(&bars.dy) * bars.n_bars() as f64 / t)
}

/// `lambda_dollar * sigma_y2 * T`, annualised by `1/T` like [`omega_hat`].
pub fn omega_product(lambda_dollar: f64, sigma_y2: f64, t: f64) -> f64 {
    lambda_dollar * sigma_y2 * t / t
}

/// Scaled impact `lambda_tilde = lambda_return * C' / P0` (return per real
/// million) and scaled flow volatility `sigma_tilde_y = sigma_y * P0 / C'`,
/// with `C' = C / cpi_factor`.
pub fn scaled_impact(lambda_ret: f64, p0: f64, scaling: &ScalingConstants) -> f64 {
    lambda_ret * scaling.effective_c() / p0
}

pub fn scaled_flow_vol(sigma_y2: f64, p0: f64, scaling: &ScalingConstants) -> f64 {
    sigma_y2.sqrt() * p0 / scaling.effective_c()
}

/// `(log lambda_tilde, log sigma_tilde_y^2)`; their sum is
/// `log(omega_product / C')` when `est` was built with the same scaling.
/// Non-positive impact is excluded.
pub fn log_decomposition(est: &StockDayEstimate, _scaling: &ScalingConstants) -> Result<(f64, f64)> {
    if est.negative_impact || !(est.lambda_scaled > 0.0) {
        return Err(Error::Excluded(format!("{} {}: non-positive price impact", est.symbol, est.date)));
    }
    Ok((est.lambda_scaled.ln(), 2.0 * est.sigma_y_dollar.ln()))
}

/// `log(omega_product / C')` for positive-impact rows.
pub fn log_omega(est: &StockDayEstimate, scaling: &ScalingConstants) -> Result<f64> {
    if est.negative_impact || !(est.omega_product > 0.0) {
        return Err(Error::Excluded(format!("{} {}: non-positive price impact", est.symbol, est.date)));
    }
    Ok((est.omega_product / scaling.effective_c()).ln())
}

/// Clips values to the `[p, 1-p]` empirical quantiles (linear
/// interpolation). Non-finite values pass through and do not enter the
/// quantiles.
pub fn winsorize(values: &[f64], p: f64) -> Result<Vec<f64>> {
    if !(0.0..0.5).contains(&p) {
        return Err(invalid(format!("winsor fraction must be in [0, 0.5), got {p}")));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if p == 0.0 || sorted.is_empty() {
        return Ok(values.to_vec());
    }
    sorted.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&sorted, p);
    let hi = quantile_sorted(&sorted, 1.0 - p);
    Ok(values.iter().map(|v| if v.is_finite() { v.clamp(lo, hi) } else { *v }).collect())
}

/// Winsorizes within each group separately (e.g. per day).
pub fn winsorize_grouped<K: Ord + Clone>(values: &[f64], groups: &[K], p: f64) -> Result<Vec<f64>> {
    if values.len() != groups.len() {
        return Err(invalid("one group key per value required"));
    }
    let mut idx: std::collections::BTreeMap<K, Vec<usize>> = std::collections::BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        idx.entry(g.clone()).or_default().push(i);
    }
    let mut out = values.to_vec();
    for members in idx.values() {
        let sub: Vec<f64> = members.iter().map(|&i| values[i]).collect();
        for (&i, w) in members.iter().zip(winsorize(&sub, p)?) {
            out[i] = w;
        }
    }
    Ok(out)
}

/// Nominal to base-period money.
pub fn deflate(nominal: f64, cpi_factor: f64) -> Result<f64> {
    if !(cpi_factor > 0.0) {
        return Err(invalid("cpi factor must be positive"));
    }
    Ok(nominal * cpi_factor)
}

pub fn inflate(real: f64, cpi_factor: f64) -> Result<f64> {
    if !(cpi_factor > 0.0) {
        return Err(invalid("cpi factor must be positive"));
    }
    Ok(real / cpi_factor)
}

/// Correlation of bar price changes and flow; NaN without variation.
pub fn flow_correlation(bars: &BarSeries) -> f64 {
    if bars.n_bars() < 2 {
        return f64::NAN;
    }
    correlation(&bars.dp, &bars.dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn bars(p0: f64, dp: Vec<f64>, dy: Vec<f64>) -> BarSeries {
        BarSeries::from_increments("T", NaiveDate::from_ymd_opt(2024, 1, 2).unwrap(), 60_000_000_000, p0, dp, dy)
            .unwrap()
    }

    #[test]
    fn omega_single_bar() {
        let b = bars(10.0, vec![1.0], vec![2.0]);
        assert!((omega_hat(&b, 1.0 / 252.0).unwrap() - 504.0).abs() < 1e-9);
        let z = bars(10.0, vec![1.0, -2.0], vec![0.0, 0.0]);
        assert_eq!(omega_hat(&z, 1.0).unwrap(), 0.0);
        assert!(omega_hat(&bars(1.0, vec![], vec![]), 1.0).is_err());
    }

    #[test]
    fn lambda_perfect_fit_on_log_returns() {
        let dy: Vec<f64> = vec![3.0, -1.0, 2.0, 0.0, -4.0];
        let mut p: f64 = 20.0;
        let dp: Vec<f64> = dy
            .iter()
            .map(|y| {
                let next = p * (0.01_f64 * y).exp();
                let d = next - p;
                p = next;
                d
            })
            .collect();
        let b = bars(20.0, dp, dy);
        assert!((lambda_hat(&b, LambdaSpec::default()).unwrap() - 0.01).abs() < 1e-12);
        let with_c = LambdaSpec { intercept: true, ..LambdaSpec::default() };
        assert!((lambda_hat(&b, with_c).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn lambda_orthogonal_and_undefined() {
        let b = bars(10.0, vec![1.0, 1.0], vec![1.0, -1.0]);
        assert!(lambda_hat(&b, LambdaSpec::levels()).unwrap().abs() < 1e-15);
        let z = bars(10.0, vec![1.0, 1.0], vec![0.0, 0.0]);
        assert!(matches!(lambda_hat(&z, LambdaSpec::default()), Err(Error::UndefinedSlope(_))));
    }

    #[test]
    fn zero_flow_bars_do_not_move_the_slope() {
        let a = bars(10.0, vec![0.2, -0.1, 0.3], vec![2.0, -1.0, 3.0]);
        let b = bars(10.0, vec![0.2, 5.0, -0.1, 0.3], vec![2.0, 0.0, -1.0, 3.0]);
        let la = lambda_hat(&a, LambdaSpec::levels()).unwrap();
        let lb = lambda_hat(&b, LambdaSpec::levels()).unwrap();
        assert!((la - lb).abs() < 1e-15);
    }

    #[test]
    fn flow_variance() {
        assert_eq!(sigma_y2_hat(&bars(1.0, vec![0.0; 4], vec![5.0; 4]), 1.0).unwrap(), 0.0);
        // alternating +q/-q: sample variance q^2 N/(N-1), times N/T
        let (q, n, t) = (3.0, 10usize, 0.5);
        let dy: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { q } else { -q }).collect();
        let want = q * q * (n * n) as f64 / ((n - 1) as f64 * t);
        let got = sigma_y2_hat(&bars(1.0, vec![0.0; n], dy), t).unwrap();
        assert!((got - want).abs() < 1e-10);
        assert!(sigma_y2_hat(&bars(1.0, vec![0.0], vec![1.0]), 1.0).is_err());
    }

    #[test]
    fn product_form() {
        assert_eq!(omega_product(1.0, 1.0, 1.0), 1.0);
        assert_eq!(omega_product(0.0, 3.0, 1.0 / 252.0), 0.0);
        assert!(omega_product(-0.5, 2.0, 1.0) < 0.0);
    }

    fn est(lambda_scaled: f64, sigma_y_dollar: f64, omega_product: f64) -> StockDayEstimate {
        StockDayEstimate {
            symbol: "T".into(),
            date: NaiveDate::from_ymd_opt(2024, 1, 2).unwrap(),
            omega_hat: omega_product,
            lambda_hat: lambda_scaled,
            lambda_scaled,
            sigma_y2_hat: 1.0,
            sigma_y_dollar,
            omega_product,
            n_bars: 390,
            negative_impact: lambda_scaled <= 0.0,
            p_prev_close: 1.0,
            flow_correlation: 0.3,
        }
    }

    #[test]
    fn log_decomposition_identities() {
        let s = ScalingConstants::default();
        assert_eq!(log_decomposition(&est(1.0, 1.0, 1e6), &s).unwrap(), (0.0, 0.0));
        let e = std::f64::consts::E;
        let (a, b) = log_decomposition(&est(e, e.sqrt(), e * e * 1e6), &s).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        assert!(matches!(log_decomposition(&est(-0.1, 1.0, -1.0), &s), Err(Error::Excluded(_))));
    }

    #[test]
    fn winsorize_cases() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(winsorize(&v, 0.0).unwrap(), v);
        let w = winsorize(&v, 0.01).unwrap();
        assert!((w[0] - 1.99).abs() < 1e-12);
        assert!((w[99] - 99.01).abs() < 1e-12);
        assert_eq!(w[50], 51.0);
        assert!(winsorize(&v, 0.5).is_err());
        assert!(winsorize(&[], 0.01).unwrap().is_empty());
    }

    #[test]
    fn winsorize_grouped_is_per_group() {
        let v = [1.0, 2.0, 3.0, 100.0, 200.0, 300.0];
        let g = [0, 0, 0, 1, 1, 1];
        let w = winsorize_grouped(&v, &g, 0.25).unwrap();
        assert_eq!(w, vec![1.5, 2.0, 2.5, 150.0, 200.0, 250.0]);
    }

    #[test]
    fn deflation() {
        assert_eq!(deflate(100.0, 1.0).unwrap(), 100.0);
        assert_eq!(deflate(100.0, 1.25).unwrap(), 125.0);
        let x = 37.3;
        assert!((deflate(inflate(x, 1.7).unwrap(), 1.7).unwrap() - x).abs() < 1e-12);
        assert!(deflate(1.0, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn series() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (2usize..60)
                .prop_flat_map(|n| (prop::collection::vec(-1.0f64..1.0, n), prop::collection::vec(-500.0f64..500.0, n)))
        }

        proptest! {
            #[test]
            fn omega_is_additive_over_partitions((dp, dy) in series(), cut in 1usize..59) {
                let n = dp.len();
                let cut = cut.min(n - 1);
                let whole = omega_hat(&bars(50.0, dp.clone(), dy.clone()), 0.1).unwrap();
                let a = omega_hat(&bars(50.0, dp[..cut].to_vec(), dy[..cut].to_vec()), 0.1).unwrap();
                let b = omega_hat(&bars(50.0, dp[cut..].to_vec(), dy[cut..].to_vec()), 0.1).unwrap();
                prop_assert!((whole - (a + b)).abs() <= 1e-9 * (1.0 + whole.abs()));
            }

            #[test]
            fn omega_scales_with_prices_and_flows((dp, dy) in series(), k in 0.1f64..10.0) {
                let base = omega_hat(&bars(50.0, dp.clone(), dy.clone()), 1.0).unwrap();
                let dpk: Vec<f64> = dp.iter().map(|x| x * k).collect();
                let dyk: Vec<f64> = dy.iter().map(|x| x * k).collect();
                let by_price = omega_hat(&bars(50.0 * k, dpk, dy.clone()), 1.0).unwrap();
                let by_flow = omega_hat(&bars(50.0, dp.clone(), dyk.clone()), 1.0).unwrap();
                prop_assert!((by_price - k * base).abs() <= 1e-9 * (1.0 + base.abs() * k));
                prop_assert!((by_flow - k * base).abs() <= 1e-9 * (1.0 + base.abs() * k));
                if dy.iter().any(|y| *y != 0.0) {
                    let l = lambda_hat(&bars(50.0, dp.clone(), dy), LambdaSpec::levels()).unwrap();
                    let lk = lambda_hat(&bars(50.0, dp, dyk), LambdaSpec::levels()).unwrap();
                    prop_assert!((lk - l / k).abs() <= 1e-9 * (1.0 + l.abs() / k));
                }
            }

            #[test]
            fn log_parts_sum_to_log_omega(l in 1e-9f64..1e-3, s2 in 1e2f64..1e10, p0 in 5.0f64..500.0, cpi in 0.5f64..2.0) {
                let sc = ScalingConstants { cpi_factor: cpi, ..ScalingConstants::default() };
                let e = StockDayEstimate {
                    lambda_scaled: scaled_impact(l, p0, &sc),
                    sigma_y_dollar: scaled_flow_vol(s2, p0, &sc),
                    omega_product: omega_product(l * p0, s2, sc.t),
                    ..est(1.0, 1.0, 1.0)
                };
                let (a, b) = log_decomposition(&e, &sc).unwrap();
                let direct = log_omega(&e, &sc).unwrap();
                prop_assert!(((a + b) - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
            }

            #[test]
            fn winsorize_stays_inside_the_quantiles(v in prop::collection::vec(-1e3f64..1e3, 1..300), p in 0.0f64..0.49) {
                let w = winsorize(&v, p).unwrap();
                let mut s = v.clone();
                s.sort_by(f64::total_cmp);
                let lo = quantile_sorted(&s, p);
                let hi = quantile_sorted(&s, 1.0 - p);
                prop_assert!(w.iter().all(|x| *x >= lo && *x <= hi));
            }
        }
    }
}
