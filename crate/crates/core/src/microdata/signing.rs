//! Trade signing: tick rule, quote-midpoint rule and CLNV zones.
//!
//! Quote-based rules fall back to the tick rule whenever the quote cannot
//! decide (trade at the midpoint, middle CLNV zone, no prevailing quote,
//! zero spread).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::events::{QuoteEvent, Side, SignedTrade, TickEvent};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigningAlgorithm {
    Tick,
    QuoteMidpoint,
    Clnv,
    /// Sides supplied with the data.
    Given,
}

impl SigningAlgorithm {
    pub const ALL: [SigningAlgorithm; 4] =
        [SigningAlgorithm::Tick, SigningAlgorithm::QuoteMidpoint, SigningAlgorithm::Clnv, SigningAlgorithm::Given];

    pub fn needs_quotes(self) -> bool {
        matches!(self, SigningAlgorithm::QuoteMidpoint | SigningAlgorithm::Clnv)
    }
}

impl FromStr for SigningAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tick" => Ok(SigningAlgorithm::Tick),
            "quote" | "midpoint" => Ok(SigningAlgorithm::QuoteMidpoint),
            "clnv" => Ok(SigningAlgorithm::Clnv),
            "given" => Ok(SigningAlgorithm::Given),
            other => Err(Error::InvalidParameter(format!(
                "unknown signing algorithm {other:?} (expected tick, quote, clnv or given)"
            ))),
        }
    }
}

impl fmt::Display for SigningAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SigningAlgorithm::Tick => "tick",
            SigningAlgorithm::QuoteMidpoint => "quote",
            SigningAlgorithm::Clnv => "clnv",
            SigningAlgorithm::Given => "given",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigningConfig {
    /// Side of the first trade of a stream, which has no prior tick.
    pub first_side: Side,
    /// A quote prevails for a trade at `t` if stamped strictly before `t - lag`.
    pub quote_lag_ns: i64,
}

impl Default for SigningConfig {
    fn default() -> Self {
        Self { first_side: Side::Buy, quote_lag_ns: 0 }
    }
}

/// Tick-rule side for each trade: uptick buy, downtick sell, zero tick
/// repeats the previous side.
pub fn tick_sides(trades: &[TickEvent], first_side: Side) -> Vec<Side> {
    let mut out = Vec::with_capacity(trades.len());
    let mut prev: Option<(f64, Side)> = None;
    for t in trades {
        let side = match prev {
            None => first_side,
            Some((p, _)) if t.price > p => Side::Buy,
            Some((p, _)) if t.price < p => Side::Sell,
            Some((_, s)) => s,
        };
        out.push(side);
        prev = Some((t.price, side));
    }
    out
}

pub fn sign_tick(trades: &[TickEvent], cfg: &SigningConfig) -> Vec<SignedTrade> {
    tick_sides(trades, cfg.first_side).into_iter().zip(trades).map(|(s, t)| SignedTrade::from_tick(t, s)).collect()
}

/// Index into `quotes` of the prevailing quote for each trade.
fn prevailing_quotes(trades: &[TickEvent], quotes: &[QuoteEvent], lag_ns: i64) -> Vec<Option<usize>> {
    let mut out = Vec::with_capacity(trades.len());
    let mut next = 0usize;
    for t in trades {
        let cutoff = t.timestamp_ns - lag_ns;
        while next < quotes.len() && quotes[next].timestamp_ns < cutoff {
            next += 1;
        }
        out.push(next.checked_sub(1));
    }
    out
}

fn sign_with_quotes<F>(trades: &[TickEvent], quotes: &[QuoteEvent], cfg: &SigningConfig, rule: F) -> Vec<SignedTrade>
where
    F: Fn(f64, &QuoteEvent) -> Option<Side>,
{
    let fallback = tick_sides(trades, cfg.first_side);
    prevailing_quotes(trades, quotes, cfg.quote_lag_ns)
        .into_iter()
        .zip(trades)
        .zip(fallback)
        .map(|((q, t), tick)| {
            let side = q.and_then(|i| rule(t.price, &quotes[i])).unwrap_or(tick);
            SignedTrade::from_tick(t, side)
        })
        .collect()
}

/// Quote-midpoint rule: above the prevailing midpoint buy, below sell.
pub fn sign_quote_midpoint(trades: &[TickEvent], quotes: &[QuoteEvent], cfg: &SigningConfig) -> Vec<SignedTrade> {
    sign_with_quotes(trades, quotes, cfg, |price, q| {
        let mid = q.midpoint();
        if price > mid {
            Some(Side::Buy)
        } else if price < mid {
            Some(Side::Sell)
        } else {
            None
        }
    })
}

/// Chakrabarty-Li-Nguyen-Van Ness zones: at or within the top 30% of the
/// spread buy, bottom 30% sell; the middle zone, prints outside the quotes
/// and zero spreads use the tick rule.
pub fn sign_clnv(trades: &[TickEvent], quotes: &[QuoteEvent], cfg: &SigningConfig) -> Vec<SignedTrade> {
    sign_with_quotes(trades, quotes, cfg, |price, q| {
        let spread = q.spread();
        if spread <= 0.0 || price > q.ask || price < q.bid {
            return None;
        }
        let above_bid = price - q.bid;
        let below_ask = q.ask - price;
        if above_bid >= 0.7 * spread {
            Some(Side::Buy)
        } else if below_ask >= 0.7 * spread {
            Some(Side::Sell)
        } else {
            None
        }
    })
}

/// Signs with `algorithm`. `given` must be supplied for [`SigningAlgorithm::Given`].
pub fn sign_trades(
    algorithm: SigningAlgorithm,
    trades: &[TickEvent],
    quotes: &[QuoteEvent],
    given: Option<&[Side]>,
    cfg: &SigningConfig,
) -> Result<Vec<SignedTrade>> {
    Ok(match algorithm {
        SigningAlgorithm::Tick => sign_tick(trades, cfg),
        SigningAlgorithm::QuoteMidpoint => sign_quote_midpoint(trades, quotes, cfg),
        SigningAlgorithm::Clnv => sign_clnv(trades, quotes, cfg),
        SigningAlgorithm::Given => {
            let sides = given.ok_or_else(|| Error::Malformed("no trade sides supplied".into()))?;
            if sides.len() != trades.len() {
                return Err(Error::Malformed("one side per trade required".into()));
            }
            trades.iter().zip(sides).map(|(t, s)| SignedTrade::from_tick(t, *s)).collect()
        }
    })
}
