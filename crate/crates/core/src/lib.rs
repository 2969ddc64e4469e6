//! Simulation and estimation of the value of private information in
//! securities markets.
//!
//! The crate has five layers:
//!
//! - [`sim`]: a discretised Kyle-Back market producing sessions with known
//!   ground truth, plus the path-level identities and bounds.
//! - [`microdata`]: trade/quote ingestion, trade signing and equidistant bars.
//! - [`estimators`]: per stock-day value of information, price impact,
//!   order-flow variance and their product decomposition.
//! - [`panel`]: aggregation, earnings event studies and two-way fixed-effects
//!   regressions with two-way clustered standard errors.
//! - [`bounds`]: SDF risk-adjustment bound and the fee comparison arithmetic.

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod microdata;
pub mod panel;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};

pub use bounds::{PuzzleInputs, PuzzleReport, SdfSpec};
pub use estimators::{ScalingConstants, StockDayEstimate};
pub use microdata::{BarSeries, QuoteEvent, SignedTrade, TickEvent};
pub use panel::{EventStudyResult, PanelRow, RegressionResult};
pub use sim::{LeakageDecomposition, SimParams, SimSession};

/// Regular-session length in seconds (09:30 to 16:00).
pub const REGULAR_SESSION_SECS: i64 = 23_400;
/// Regular-session open, nanoseconds since midnight.
pub const REGULAR_OPEN_NS: i64 = 34_200 * 1_000_000_000;
/// Trading days per year used for annualisation.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;
