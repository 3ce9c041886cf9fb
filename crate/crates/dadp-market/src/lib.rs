//! Double-sided auction market clearing with discriminatory price weights.
//!
//! The crate models an energy market in which load aggregators (buyers) and
//! energy service providers (sellers) interact only with a trading center.
//! Players reveal scalar bids and offers rather than their value or cost
//! functions; the trading center clears the market with per-player price
//! weights, runs consensus ADMM loops to elicit quantities, and balances the
//! two sides with an outer coordination loop.

pub mod admm;
pub mod atc;
pub mod error;
pub mod flow;
pub mod mechanisms;
pub mod model;
pub mod weights;

pub use error::{MarketError, Result};
