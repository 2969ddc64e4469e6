use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::events::{QuoteEvent, SignedTrade};
use crate::error::{invalid, Result};

/// Regular-session window and the price the first bar's change references.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionBounds {
    pub open_ns: i64,
    pub close_ns: i64,
    /// Reference for the first bar; defaults to the session's first trade.
    pub open_price: Option<f64>,
}

impl SessionBounds {
    pub fn regular() -> Self {
        Self {
            open_ns: crate::REGULAR_OPEN_NS,
            close_ns: crate::REGULAR_OPEN_NS + crate::REGULAR_SESSION_SECS * 1_000_000_000,
            open_price: None,
        }
    }

    pub fn length_ns(&self) -> i64 {
        self.close_ns - self.open_ns
    }
}

/// Equidistant price changes and net signed flow for one stock-day.
///
/// Bar `i` (1-based) covers `(open + (i-1)h, open + ih]`; a trade stamped
/// exactly at the open belongs to bar 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarSeries {
    pub symbol: String,
    pub date: NaiveDate,
    pub interval_ns: i64,
    pub dp: Vec<f64>,
    pub dy: Vec<f64>,
    /// Price at the end of each bar (carried forward through empty bars).
    pub close: Vec<f64>,
    /// Price the first bar's change is measured from.
    pub reference_price: f64,
    /// Prior trading day's closing price, used for scaling only.
    pub p_prev_close: f64,
}

impl BarSeries {
    pub fn n_bars(&self) -> usize {
        self.dp.len()
    }

    pub fn interval_secs(&self) -> f64 {
        self.interval_ns as f64 / 1e9
    }

    /// Price levels at bar boundaries, starting with the reference price.
    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.reference_price).chain(self.close.iter().copied())
    }

    /// Builds a series directly from increments (reference price `p0`).
    pub fn from_increments(
        symbol: impl Into<String>,
        date: NaiveDate,
        interval_ns: i64,
        p0: f64,
        dp: Vec<f64>,
        dy: Vec<f64>,
    ) -> Result<Self> {
        if dp.len() != dy.len() {
            return Err(invalid("dp and dy must have equal length"));
        }
        if interval_ns <= 0 {
            return Err(invalid("bar interval must be positive"));
        }
        let mut close = Vec::with_capacity(dp.len());
        let mut level = p0;
        for d in &dp {
            level += d;
            close.push(level);
        }
        Ok(Self { symbol: symbol.into(), date, interval_ns, dp, dy, close, reference_price: p0, p_prev_close: p0 })
    }

    /// Aggregates `k` consecutive bars. Price changes come from the bar-end
    /// levels, so they equal a direct build at `k h`.
    pub fn rebin(&self, k: usize) -> Result<BarSeries> {
        let n = self.n_bars();
        if k == 0 || !n.is_multiple_of(k) {
            return Err(invalid(format!("cannot merge {n} bars in groups of {k}")));
        }
        let close: Vec<f64> = self.close.iter().skip(k - 1).step_by(k).copied().collect();
        let mut prev = self.reference_price;
        let dp = close
            .iter()
            .map(|c| {
                let d = c - prev;
                prev = *c;
                d
            })
            .collect();
        let dy = self.dy.chunks(k).map(|c| c.iter().sum()).collect();
        Ok(BarSeries {
            symbol: self.symbol.clone(),
            date: self.date,
            interval_ns: self.interval_ns * k as i64,
            dp,
            dy,
            close,
            reference_price: self.reference_price,
            p_prev_close: self.p_prev_close,
        })
    }
}

/// Which price a bar closes at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarPrice {
    LastTrade,
    /// Midpoint of the last quote at or before the bar end.
    Midpoint,
}

fn bar_index(ts: i64, open: i64, h: i64) -> usize {
    let off = ts - open;
    if off <= 0 {
        0
    } else {
        ((off - 1) / h) as usize
    }
}

fn check_grid(interval_ns: i64, bounds: &SessionBounds) -> Result<usize> {
    if interval_ns <= 0 {
        return Err(invalid("bar interval must be positive"));
    }
    let len = bounds.length_ns();
    if len <= 0 {
        return Err(invalid("session close must follow the open"));
    }
    if len % interval_ns != 0 {
        return Err(invalid(format!("bar interval {interval_ns} ns does not divide the {len} ns session")));
    }
    Ok((len / interval_ns) as usize)
}

pub struct BarMeta<'a> {
    pub symbol: &'a str,
    pub date: NaiveDate,
    pub p_prev_close: f64,
}

/// Builds equidistant bars from signed trades.
///
/// `dy` is the net signed share flow of each bar; `dp` is the change of the
/// last trade price against the previous bar, zero for bars without trades.
pub fn build_bars(
    signed: &[SignedTrade],
    interval_ns: i64,
    bounds: &SessionBounds,
    meta: &BarMeta<'_>,
) -> Result<BarSeries> {
    let n = check_grid(interval_ns, bounds)?;
    let mut last: Vec<Option<f64>> = vec![None; n];
    let mut dy = vec![0.0; n];
    for t in signed {
        if t.timestamp_ns < bounds.open_ns || t.timestamp_ns > bounds.close_ns {
            return Err(invalid(format!("trade at {} ns outside the session", t.timestamp_ns)));
        }
        let i = bar_index(t.timestamp_ns, bounds.open_ns, interval_ns);
        dy[i] += t.flow();
        last[i] = Some(t.price);
    }
    let reference = bounds.open_price.or_else(|| signed.first().map(|t| t.price)).unwrap_or(meta.p_prev_close);
    finish(last, dy, reference, interval_ns, meta)
}

/// As [`build_bars`] but with bar-end quote midpoints as prices.
pub fn build_bars_midpoint(
    signed: &[SignedTrade],
    quotes: &[QuoteEvent],
    interval_ns: i64,
    bounds: &SessionBounds,
    meta: &BarMeta<'_>,
) -> Result<BarSeries> {
    let n = check_grid(interval_ns, bounds)?;
    let mut dy = vec![0.0; n];
    for t in signed {
        if t.timestamp_ns < bounds.open_ns || t.timestamp_ns > bounds.close_ns {
            return Err(invalid(format!("trade at {} ns outside the session", t.timestamp_ns)));
        }
        dy[bar_index(t.timestamp_ns, bounds.open_ns, interval_ns)] += t.flow();
    }
    let mut last: Vec<Option<f64>> = vec![None; n];
    let mut first_mid = None;
    for q in quotes {
        if q.timestamp_ns > bounds.close_ns {
            break;
        }
        if q.timestamp_ns < bounds.open_ns {
            first_mid = Some(q.midpoint());
            continue;
        }
        first_mid.get_or_insert(q.midpoint());
        last[bar_index(q.timestamp_ns, bounds.open_ns, interval_ns)] = Some(q.midpoint());
    }
    let reference = bounds.open_price.or(first_mid).unwrap_or(meta.p_prev_close);
    finish(last, dy, reference, interval_ns, meta)
}

fn finish(
    last: Vec<Option<f64>>,
    dy: Vec<f64>,
    reference: f64,
    interval_ns: i64,
    meta: &BarMeta<'_>,
) -> Result<BarSeries> {
    let mut close = Vec::with_capacity(last.len());
    let mut dp = Vec::with_capacity(last.len());
    let mut prev = reference;
    for l in last {
        let c = l.unwrap_or(prev);
        dp.push(c - prev);
        close.push(c);
        prev = c;
    }
    Ok(BarSeries {
        symbol: meta.symbol.to_string(),
        date: meta.date,
        interval_ns,
        dp,
        dy,
        close,
        reference_price: reference,
        p_prev_close: meta.p_prev_close,
    })
}

/// Records that carry the prior trading day's close.
pub trait PriorClose {
    fn prior_close(&self) -> f64;
}

impl PriorClose for BarSeries {
    fn prior_close(&self) -> f64 {
        self.p_prev_close
    }
}

/// Drops records whose prior close is below `min_price`; `0` keeps all.
pub fn filter_universe<T: PriorClose>(records: Vec<T>, min_price: f64) -> Vec<T> {
    records.into_iter().filter(|r| !(r.prior_close() < min_price)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microdata::events::Side;

    const S: i64 = 1_000_000_000;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 3, 1).unwrap()
    }

    fn meta(p: f64) -> BarMeta<'static> {
        BarMeta { symbol: "AAA", date: day(), p_prev_close: p }
    }

    fn bounds(len_s: i64) -> SessionBounds {
        SessionBounds { open_ns: 0, close_ns: len_s * S, open_price: None }
    }

    fn tr(ts_s: i64, price: f64, size: f64, side: Side) -> SignedTrade {
        SignedTrade { timestamp_ns: ts_s * S, price, size, side }
    }

    #[test]
    fn netting_within_a_bar() {
        let t = [tr(10, 10.0, 100.0, Side::Buy), tr(20, 10.1, 40.0, Side::Sell)];
        let b = build_bars(&t, 60 * S, &bounds(60), &meta(10.0)).unwrap();
        assert_eq!(b.dy, vec![60.0]);
        assert!((b.dp[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn empty_bar_carries_forward() {
        let t = [tr(30, 10.0, 1.0, Side::Buy), tr(150, 10.5, 2.0, Side::Buy)];
        let b = build_bars(&t, 60 * S, &bounds(180), &meta(9.0)).unwrap();
        assert_eq!(b.dy, vec![1.0, 0.0, 2.0]);
        assert_eq!(b.dp, vec![0.0, 0.0, 0.5]);
        assert_eq!(b.close, vec![10.0, 10.0, 10.5]);
        assert_eq!(b.reference_price, 10.0);
    }

    #[test]
    fn bar_edges_are_right_closed() {
        let t = [tr(0, 10.0, 1.0, Side::Buy), tr(60, 11.0, 1.0, Side::Buy), tr(61, 12.0, 1.0, Side::Sell)];
        let b = build_bars(&t, 60 * S, &bounds(120), &meta(10.0)).unwrap();
        assert_eq!(b.dy, vec![2.0, -1.0]);
        assert_eq!(b.close, vec![11.0, 12.0]);
    }

    #[test]
    fn open_price_is_the_reference_when_given() {
        let t = [tr(30, 10.0, 1.0, Side::Buy)];
        let mut bd = bounds(60);
        bd.open_price = Some(9.5);
        let b = build_bars(&t, 60 * S, &bd, &meta(9.0)).unwrap();
        assert_eq!(b.dp, vec![0.5]);
    }

    #[test]
    fn rejects_bad_grids_and_out_of_session_trades() {
        assert!(build_bars(&[], 7 * S, &bounds(60), &meta(1.0)).is_err());
        assert!(build_bars(&[], 0, &bounds(60), &meta(1.0)).is_err());
        let late = [tr(61, 10.0, 1.0, Side::Buy)];
        assert!(build_bars(&late, 60 * S, &bounds(60), &meta(1.0)).is_err());
    }

    #[test]
    fn no_trades_gives_flat_bars() {
        let b = build_bars(&[], 60 * S, &bounds(180), &meta(7.0)).unwrap();
        assert_eq!(b.dp, vec![0.0; 3]);
        assert_eq!(b.dy, vec![0.0; 3]);
        assert_eq!(b.reference_price, 7.0);
    }

    #[test]
    fn midpoint_bars_use_quotes() {
        let t = [tr(30, 10.02, 5.0, Side::Buy)];
        let q = [QuoteEvent::new(-S, 9.99, 10.01).unwrap(), QuoteEvent::new(90 * S, 10.01, 10.03).unwrap()];
        let b = build_bars_midpoint(&t, &q, 60 * S, &bounds(120), &meta(10.0)).unwrap();
        assert_eq!(b.dy, vec![5.0, 0.0]);
        assert_eq!(b.reference_price, 10.0);
        assert!((b.dp[0]).abs() < 1e-12);
        assert!((b.dp[1] - 0.02).abs() < 1e-12);
    }

    #[test]
    fn universe_filter_threshold_is_strict() {
        let mk = |p| BarSeries::from_increments("X", day(), S, p, vec![0.0], vec![0.0]).unwrap();
        let kept = filter_universe(vec![mk(3.0), mk(4.99), mk(5.0), mk(50.0)], 5.0);
        let closes: Vec<f64> = kept.iter().map(|b| b.p_prev_close).collect();
        assert_eq!(closes, vec![5.0, 50.0]);
        assert_eq!(filter_universe(vec![mk(3.0), mk(50.0)], 0.0).len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn trades() -> impl Strategy<Value = Vec<SignedTrade>> {
            prop::collection::vec((0i64..3600, 900u32..1100, 1u32..1000, any::<bool>()), 0..200).prop_map(|mut v| {
                v.sort_by_key(|x| x.0);
                v.into_iter()
                    .map(|(ts, p, s, buy)| tr(ts, p as f64 / 100.0, s as f64, if buy { Side::Buy } else { Side::Sell }))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn conservation(t in trades()) {
                let b = build_bars(&t, 60 * S, &bounds(3600), &meta(10.0)).unwrap();
                let total: f64 = t.iter().map(|x| x.flow()).sum();
                prop_assert_eq!(b.dy.iter().sum::<f64>(), total);
                let last = t.last().map_or(b.reference_price, |x| x.price);
                let dp_sum: f64 = b.dp.iter().sum();
                prop_assert!((dp_sum - (last - b.reference_price)).abs() < 1e-9);
            }

            #[test]
            fn rebinning_matches_direct_build(t in trades(), k in prop::sample::select(vec![1usize, 2, 3, 4, 5, 6, 10, 12, 15, 20, 30, 60])) {
                let fine = build_bars(&t, 60 * S, &bounds(3600), &meta(10.0)).unwrap();
                let direct = build_bars(&t, 60 * S * k as i64, &bounds(3600), &meta(10.0)).unwrap();
                prop_assert_eq!(fine.rebin(k).unwrap(), direct);
            }
        }
    }
}
