//! Stochastic gradient descent under heavy-tailed and finite-variance noise
//! on one-dimensional landscapes, with the runaway random walk that governs
//! exits from sharp minima.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod landscape;
pub mod montecarlo;
pub mod noise;
pub mod par;
mod quad;
pub mod rrw;
pub mod sgd;
pub mod stats;
pub mod timescales;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
