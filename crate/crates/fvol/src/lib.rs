//! Nonparametric volatility estimation for functional data with responses
//! missing at random.
//!
//! The crate estimates the regression operator and the conditional
//! variance/volatility of a scalar response given a curve-valued predictor,
//! with kernel smoothers in three flavors — complete-data, simplified
//! (observed cases only) and imputed — plus plug-in confidence intervals,
//! leave-one-out cross-validated bandwidths, a Monte-Carlo study harness and
//! a realized-volatility pipeline for intraday price data.

pub mod bandwidth;
pub mod config;
pub mod error;
pub mod estimator;
pub mod fda;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod model;
pub mod pipeline;
pub mod semimetric;
pub mod simulation;
pub mod stats;

pub use error::{FvolError, Result};
