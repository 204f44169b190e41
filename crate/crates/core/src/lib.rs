//! Fairness auditing under controlled dataset bias.
//!
//! The pipeline generates a synthetic scored population ([`datagen`]), injects
//! sample bias and/or label bias ([`bias`]), fits an elastic-net logistic
//! classifier ([`model`]) and evaluates six group-fairness metrics on its
//! test-set predictions ([`metrics`]). [`harness`] repeats this over the 2×2
//! grid of bias types and aggregates the results.

pub mod bias;
pub mod cli;
pub mod config;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod model;
pub mod seed;

pub use error::{Error, Result};
