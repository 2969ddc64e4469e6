//! Trade and quote ingestion, trade signing and equidistant bars.

pub mod bars;
pub mod events;
pub mod io;
pub mod signing;
pub mod synthetic;

pub use bars::{
    build_bars, build_bars_midpoint, filter_universe, BarMeta, BarPrice, BarSeries, PriorClose, SessionBounds,
};
pub use events::{QuoteEvent, Side, SignedTrade, TickEvent};
pub use signing::{sign_clnv, sign_quote_midpoint, sign_tick, sign_trades, SigningAlgorithm, SigningConfig};
