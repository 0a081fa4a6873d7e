//! Discrete two-sided limit order book with Poisson order flow, its
//! SDE/SPDE scaling limit, and the statistics used to compare the two.

pub mod auxiliary;
pub mod engine;
pub mod error;
pub mod limit;
pub mod model;
pub mod rng;
pub mod scenarios;
pub mod stats;

pub use error::{Error, Result};
