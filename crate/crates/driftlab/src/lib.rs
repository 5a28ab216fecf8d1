//! A filtering laboratory for markets with a hidden mean-reverting drift.
//!
//! The hidden drift of a risky asset follows an Ornstein-Uhlenbeck process
//! observed only through returns; investors may additionally receive expert
//! opinions (noisy drift observations arriving at Poisson times) or observe
//! a continuous-time expert diffusion. The crate simulates the market, runs
//! the Kalman-type filter of each information regime, and verifies the
//! asymptotic error bounds of the filters as the expert-opinion arrival
//! intensity grows.
//!
//! Modules:
//! - [`linalg`]: symmetric/PSD matrix kernel (square roots, inverses,
//!   Loewner ordering, trace inequalities).
//! - [`params`]: model parameters.
//! - [`market`]: path simulation on an event-augmented grid.
//! - [`filters`]: return-only, expert-opinion and continuous-expert filters.
//! - [`bounds`]: covariance drift/jump maps and the explicit error-bound
//!   constants, with randomized inequality sweeps.
//! - [`montecarlo`]: parallel convergence studies with reproducible noise.
//! - [`scenario`] and [`commands`]: config files, CSV reports and the
//!   command-line entry points.

// `!(x > 0.0)` guards reject NaN along with nonpositive values; indexed
// loops mirror the column-major matrix arithmetic.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod commands;
pub mod error;
pub mod filters;
pub mod linalg;
pub mod market;
pub mod montecarlo;
pub mod params;
pub mod scenario;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
