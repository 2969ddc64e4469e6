//! Turns simulated tapes into trade and quote streams.
//!
//! Step `n` of an `N`-step tape is stamped `open + n * (session / N)`, so
//! bars at that spacing reproduce the tape increments. Each nonzero net flow
//! becomes one print of size `|dY|` on side `sign(dY)`.

use super::bars::SessionBounds;
use super::events::{QuoteEvent, Side, SignedTrade};
use crate::error::{invalid, Result};
use crate::sim::tape::TapeRow;

/// Nanoseconds between tape steps over the regular session.
pub fn tape_step_ns(n_steps: usize) -> Result<i64> {
    let len = crate::REGULAR_SESSION_SECS * 1_000_000_000;
    if n_steps == 0 || len % n_steps as i64 != 0 {
        return Err(invalid(format!("{n_steps} steps do not divide the session evenly in nanoseconds")));
    }
    Ok(len / n_steps as i64)
}

fn side_of(dy: f64) -> Side {
    if dy > 0.0 {
        Side::Buy
    } else {
        Side::Sell
    }
}

/// Trades at the tape prices with the true sides, plus session bounds whose
/// opening price is the tape's first level.
pub fn tape_trades(rows: &[TapeRow]) -> Result<(Vec<SignedTrade>, SessionBounds)> {
    if rows.len() < 2 {
        return Err(invalid("tape has no steps"));
    }
    let step = tape_step_ns(rows.len() - 1)?;
    let mut bounds = SessionBounds::regular();
    bounds.open_price = Some(rows[0].p);
    let mut trades = Vec::new();
    for r in &rows[1..] {
        if r.dy == 0.0 {
            continue;
        }
        if !(r.p > 0.0) {
            return Err(invalid(format!("non-positive tape price {} at step {}", r.p, r.step)));
        }
        trades.push(SignedTrade {
            timestamp_ns: bounds.open_ns + r.step as i64 * step,
            price: r.p,
            size: r.dy.abs(),
            side: side_of(r.dy),
        });
    }
    Ok((trades, bounds))
}

/// Trades printing exactly at the bid (sells) or ask (buys) of a quote
/// centred on the previous tape price, each quote posted one nanosecond
/// before its trade.
pub fn tape_trades_at_quotes(rows: &[TapeRow], half_spread: f64) -> Result<(Vec<SignedTrade>, Vec<QuoteEvent>)> {
    if !(half_spread > 0.0 && half_spread.is_finite()) {
        return Err(invalid("half spread must be positive"));
    }
    let (mid_trades, bounds) = tape_trades(rows)?;
    let step = tape_step_ns(rows.len() - 1)?;
    let mut trades = Vec::with_capacity(mid_trades.len());
    let mut quotes = Vec::with_capacity(mid_trades.len());
    for t in mid_trades {
        let n = ((t.timestamp_ns - bounds.open_ns) / step) as usize;
        let mid = rows[n - 1].p;
        let q = QuoteEvent::new(t.timestamp_ns - 1, mid - half_spread, mid + half_spread)?;
        let price = match t.side {
            Side::Buy => q.ask,
            Side::Sell => q.bid,
        };
        quotes.push(q);
        trades.push(SignedTrade { price, ..t });
    }
    Ok((trades, quotes))
}
