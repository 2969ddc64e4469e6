use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::PanelRow;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarningsDesignation {
    pub date: NaiveDate,
    /// Volume data were incomplete and the official date was kept.
    pub fallback: bool,
}

/// Trading day with the highest firm-to-market volume ratio within
/// `half_width` trading days of the official date. Ties go to the earliest
/// day. Missing or non-positive volumes keep the official date.
pub fn designate_earnings_day(
    calendar: &[NaiveDate],
    firm_volume: &BTreeMap<NaiveDate, f64>,
    market_volume: &BTreeMap<NaiveDate, f64>,
    official: NaiveDate,
    half_width: usize,
) -> EarningsDesignation {
    let keep = EarningsDesignation { date: official, fallback: true };
    let Ok(c) = calendar.binary_search(&official) else {
        log::warn!("earnings date {official} is not a trading day; kept as is");
        return keep;
    };
    let lo = c.saturating_sub(half_width);
    let hi = (c + half_width).min(calendar.len() - 1);
    let mut best: Option<(NaiveDate, f64)> = None;
    for d in &calendar[lo..=hi] {
        let ratio = match (firm_volume.get(d), market_volume.get(d)) {
            (Some(f), Some(m)) if *m > 0.0 && f.is_finite() => f / m,
            _ => {
                log::warn!("missing volume on {d} around earnings date {official}; kept the official date");
                return keep;
            }
        };
        if best.is_none_or(|(_, b)| ratio > b) {
            best = Some((*d, ratio));
        }
    }
    EarningsDesignation { date: best.map_or(official, |b| b.0), fallback: false }
}

/// Mean with a date-clustered standard error and 95% band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: f64,
    pub se: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    fn clustered(values: &[(NaiveDate, f64)]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().map(|v| v.1).sum::<f64>() / n;
        let mut by_date: BTreeMap<NaiveDate, f64> = BTreeMap::new();
        for (d, v) in values {
            *by_date.entry(*d).or_insert(0.0) += v - mean;
        }
        let g = by_date.len() as f64;
        let scale = if g > 1.0 { g / (g - 1.0) } else { 1.0 };
        let se = (scale * by_date.values().map(|s| s * s).sum::<f64>()).sqrt() / n;
        Self { mean, se, lo: mean - 1.96 * se, hi: mean + 1.96 * se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPoint {
    pub relative_day: i64,
    pub n: usize,
    pub log_omega: Band,
    pub log_lambda: Band,
    pub log_sigma2: Band,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStudyResult {
    pub window: usize,
    pub n_events: usize,
    pub points: Vec<EventPoint>,
}

impl EventStudyResult {
    pub fn at(&self, relative_day: i64) -> Option<&EventPoint> {
        self.points.iter().find(|p| p.relative_day == relative_day)
    }

    /// Day-0 mean log value minus the average of the other days' means,
    /// with the day-0 standard error.
    pub fn day0_excess(&self) -> Option<(f64, f64)> {
        let zero = self.at(0)?;
        let off: Vec<f64> = self.points.iter().filter(|p| p.relative_day != 0).map(|p| p.log_omega.mean).collect();
        if off.is_empty() {
            return None;
        }
        let base = off.iter().sum::<f64>() / off.len() as f64;
        Some((zero.log_omega.mean - base, zero.log_omega.se))
    }
}

/// Cross-stock means of the log value of information and its components by
/// trading day relative to each earnings day, over the positive-impact rows.
/// Relative days count positions in the panel's own date calendar.
pub fn earnings_event_study(rows: &[PanelRow], window: usize) -> EventStudyResult {
    let mut calendar: Vec<NaiveDate> = rows.iter().map(|r| r.date).collect();
    calendar.sort();
    calendar.dedup();
    let pos: BTreeMap<NaiveDate, usize> = calendar.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let mut by_stock: BTreeMap<&str, BTreeMap<usize, &PanelRow>> = BTreeMap::new();
    for r in rows {
        by_stock.entry(&r.symbol).or_default().insert(pos[&r.date], r);
    }

    let w = window as i64;
    let mut obs: BTreeMap<i64, Vec<[(NaiveDate, f64); 3]>> = BTreeMap::new();
    let mut n_events = 0;
    for days in by_stock.values() {
        for &c in days.iter().filter(|(_, r)| r.earnings).map(|(c, _)| c) {
            n_events += 1;
            for k in -w..=w {
                let Some(idx) = c.checked_add_signed(k as isize) else { continue };
                let Some(row) = days.get(&idx) else { continue };
                if let (Some(a), Some(b), Some(s)) = (row.log_omega, row.log_lambda, row.log_sigma2) {
                    obs.entry(k).or_default().push([(row.date, a), (row.date, b), (row.date, s)]);
                }
            }
        }
    }
    let points = obs
        .into_iter()
        .map(|(k, v)| {
            let col = |j: usize| Band::clustered(&v.iter().map(|o| o[j]).collect::<Vec<_>>());
            EventPoint { relative_day: k, n: v.len(), log_omega: col(0), log_lambda: col(1), log_sigma2: col(2) }
        })
        .collect();
    EventStudyResult { window, n_events, points }
}

/// Curve for one variable: `relative_day,mean,lo,hi`.
pub fn write_event_study<W: Write>(w: W, result: &EventStudyResult, variable: &str) -> Result<()> {
    let pick: fn(&EventPoint) -> &Band = match variable {
        "log_omega" => |p| &p.log_omega,
        "log_lambda" => |p| &p.log_lambda,
        "log_sigma2" => |p| &p.log_sigma2,
        other => return Err(invalid(format!("no event-study curve for {other:?}"))),
    };
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["relative_day", "mean", "lo", "hi"])?;
    for p in &result.points {
        let b = pick(p);
        wtr.write_record([p.relative_day.to_string(), b.mean.to_string(), b.lo.to_string(), b.hi.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn day(i: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + Days::new(i)
    }

    #[test]
    fn designation_argmax_and_ties() {
        let cal: Vec<NaiveDate> = (0..5).map(day).collect();
        let mkt: BTreeMap<_, _> = cal.iter().map(|d| (*d, 1.0)).collect();
        let case = |r: [f64; 3]| {
            let firm: BTreeMap<_, _> = (1..4).map(|i| (day(i), r[i as usize - 1])).collect();
            designate_earnings_day(&cal, &firm, &mkt, day(2), 1)
        };
        assert_eq!(case([0.1, 0.5, 0.2]).date, day(2));
        assert_eq!(case([0.9, 0.5, 0.2]).date, day(1));
        // every tie pattern over three days resolves to the earliest maximum
        for bits in 0..8u32 {
            let r = [0, 1, 2].map(|j| if bits >> j & 1 == 1 { 0.7 } else { 0.3 });
            let got = case(r);
            let max = r.iter().cloned().fold(f64::MIN, f64::max);
            let first = r.iter().position(|v| *v == max).unwrap() as u64 + 1;
            assert_eq!(got.date, day(first), "{r:?}");
            assert!(!got.fallback);
        }
        let partial: BTreeMap<_, _> = [(day(1), 5.0), (day(2), 1.0)].into_iter().collect();
        let d = designate_earnings_day(&cal, &partial, &mkt, day(2), 1);
        assert_eq!(d, EarningsDesignation { date: day(2), fallback: true });
    }

    fn panel(n_stocks: usize, n_days: u64, effect: f64, constant: Option<f64>, seed: u64) -> Vec<PanelRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for s in 0..n_stocks {
            let event = rng.random_range(30..n_days - 30);
            let alpha: f64 = rng.sample(StandardNormal);
            for t in 0..n_days {
                let e = t == event;
                let v = match constant {
                    Some(c) => c,
                    None => alpha + rng.sample::<f64, _>(StandardNormal) + if e { effect } else { 0.0 },
                };
                rows.push(PanelRow {
                    symbol: format!("S{s:03}"),
                    date: day(t),
                    omega_hat: v.exp(),
                    omega_product: v.exp(),
                    lambda_scaled: 1.0,
                    sigma_y_dollar: 1.0,
                    negative_impact: false,
                    log_omega: Some(v),
                    log_lambda: Some(v / 2.0),
                    log_sigma2: Some(v / 2.0),
                    size: None,
                    beme: None,
                    momentum: None,
                    earnings: e,
                    mcap: None,
                });
            }
        }
        rows
    }

    #[test]
    fn constant_panel_is_flat() {
        let r = earnings_event_study(&panel(10, 80, 0.0, Some(2.5), 1), 22);
        assert_eq!(r.points.len(), 45);
        assert_eq!(r.n_events, 10);
        for p in &r.points {
            assert!((p.log_omega.mean - 2.5).abs() < 1e-12);
            assert!(p.log_omega.hi - p.log_omega.lo < 1e-12);
        }
    }

    #[test]
    fn injected_spike_is_recovered() {
        let r = earnings_event_study(&panel(200, 120, 1.27, None, 2), 22);
        let (excess, se) = r.day0_excess().unwrap();
        assert!((excess - 1.27).abs() <= 2.0 * se, "{excess} +/- {se}");
        let p = r.at(0).unwrap();
        assert!((p.log_omega.hi - p.log_omega.mean - (p.log_omega.mean - p.log_omega.lo)).abs() < 1e-12);
    }

    #[test]
    fn shuffled_events_show_no_spike() {
        let mut rows = panel(200, 120, 1.27, None, 3);
        // move every event flag to a random other day of the same stock
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for chunk in rows.chunks_mut(120) {
            let old = chunk.iter().position(|r| r.earnings).unwrap();
            chunk[old].earnings = false;
            let mut new = rng.random_range(30..90);
            while (new as i64 - old as i64).abs() <= 22 {
                new = rng.random_range(30..90);
            }
            chunk[new].earnings = true;
        }
        let r = earnings_event_study(&rows, 22);
        let (excess, se) = r.day0_excess().unwrap();
        assert!(excess.abs() <= 3.0 * se, "{excess} +/- {se}");
    }

    #[test]
    fn no_events_is_empty() {
        let mut rows = panel(3, 70, 0.0, None, 5);
        rows.iter_mut().for_each(|r| r.earnings = false);
        let r = earnings_event_study(&rows, 22);
        assert!(r.points.is_empty());
        assert!(r.day0_excess().is_none());
    }
}
