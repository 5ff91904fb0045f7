//! Stochastic-geometry analytics and Monte Carlo simulation of base-station
//! switch-off strategies in massive-MIMO small-cell networks.

pub mod error;
pub mod exec;
pub mod experiment;
pub mod geometry;
pub mod hcpp;
pub mod metrics;
pub mod numeric;
pub mod propagation;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
