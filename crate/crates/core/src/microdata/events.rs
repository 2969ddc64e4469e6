use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A trade print. Timestamps are nanoseconds since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickEvent {
    pub timestamp_ns: i64,
    pub price: f64,
    pub size: f64,
}

impl TickEvent {
    pub fn new(timestamp_ns: i64, price: f64, size: f64) -> Result<Self> {
        if !(price.is_finite() && price > 0.0) {
            return Err(invalid(format!("trade price must be positive, got {price}")));
        }
        if !(size.is_finite() && size > 0.0) {
            return Err(invalid(format!("trade size must be positive, got {size}")));
        }
        Ok(Self { timestamp_ns, price, size })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuoteEvent {
    pub timestamp_ns: i64,
    pub bid: f64,
    pub ask: f64,
}

impl QuoteEvent {
    pub fn new(timestamp_ns: i64, bid: f64, ask: f64) -> Result<Self> {
        if !(bid.is_finite() && ask.is_finite() && bid > 0.0 && ask >= bid) {
            return Err(invalid(format!("quote needs ask >= bid > 0, got {bid}/{ask}")));
        }
        Ok(Self { timestamp_ns, bid, ask })
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    pub fn spread(&self) -> f64 {
        self.ask - self.bid
    }
}

/// Trade direction: buyer-initiated (+1) or seller-initiated (-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Buy => 1.0,
            Side::Sell => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Side::Buy => 1,
            Side::Sell => -1,
        }
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "+1" => Ok(Side::Buy),
            "-1" => Ok(Side::Sell),
            other => Err(Error::Malformed(format!("side must be +1 or -1, got {other:?}"))),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedTrade {
    pub timestamp_ns: i64,
    pub price: f64,
    pub size: f64,
    pub side: Side,
}

impl SignedTrade {
    pub fn from_tick(tick: &TickEvent, side: Side) -> Self {
        Self { timestamp_ns: tick.timestamp_ns, price: tick.price, size: tick.size, side }
    }

    pub fn tick(&self) -> TickEvent {
        TickEvent { timestamp_ns: self.timestamp_ns, price: self.price, size: self.size }
    }

    /// Signed share flow of the trade.
    pub fn flow(&self) -> f64 {
        self.side.sign() * self.size
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_enforce_invariants() {
        assert!(TickEvent::new(0, 0.0, 1.0).is_err());
        assert!(TickEvent::new(0, 1.0, 0.0).is_err());
        assert!(TickEvent::new(0, 1.0, 1.0).is_ok());
        assert!(QuoteEvent::new(0, 10.0, 9.99).is_err());
        assert!(QuoteEvent::new(0, 0.0, 1.0).is_err());
        assert!(QuoteEvent::new(0, 10.0, 10.0).is_ok());
    }

    #[test]
    fn side_parsing() {
        assert_eq!("1".parse::<Side>().unwrap(), Side::Buy);
        assert_eq!("+1".parse::<Side>().unwrap(), Side::Buy);
        assert_eq!("-1".parse::<Side>().unwrap(), Side::Sell);
        assert!("0".parse::<Side>().is_err());
        assert_eq!(Side::Sell.to_string(), "-1");
    }
}
