//! First-hitting-time densities of a price process recovered from European
//! digital put prices, and the barrier products priced from them.
//!
//! The density is never simulated. It solves a discretised first-kind Volterra
//! equation whose kernel is the value of the at-barrier digital hedge at the
//! moment of first touch, driven by a forward volatility and forward skew that
//! the user supplies (or derives from today's surface).
//!
//! * [`kernel`]: Black-Scholes closed forms and the skew-corrected digital put.
//! * [`market`]: curves, dividends, the spot surface and the forward-skew spec.
//! * [`solver`]: the hitting-density recursion and Am-DIP pricing.
//! * [`mc`]: Monte Carlo oracle with Brownian-bridge crossing correction.
//! * [`scenarios`]: skew sweeps and conservative stress ladders.
//! * [`config`]: the JSON run configuration shared by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod export;
pub mod kernel;
pub mod market;
pub mod mc;
pub mod scenarios;
pub mod solver;
pub mod validation;

pub use error::{Error, ErrorKind, Result};
pub use kernel::{BsQuote, Slope, SlopeUnit};
pub use market::{DiscountCurve, DividendModel, ForwardSkewSpec, MarketState, TermStructure, VolSurface};
pub use solver::{BarrierContract, HittingDensity, NegativityPolicy, Payout, SolverConfig};
