//! Decreasing-step Euler (unadjusted Langevin) simulation of ergodic SDEs
//! with multiplicative noise, with exact Ornstein–Uhlenbeck oracles and
//! convergence-order measurement.

pub mod error;
pub mod cli;
pub mod errorlab;
pub mod metrics;
pub mod model;
pub mod ou_oracle;
pub mod scheme;
pub mod steps;

pub use error::{Error, Result};
