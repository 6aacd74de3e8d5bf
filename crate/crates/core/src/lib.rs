//! Agent-based SIR simulation on a synthetic, geo-referenced urban population.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the whole modelling
//! pipeline:
//!
//! * [`population`]: territory grid, tiles and age-stratified agents.
//! * [`network`]: households, social fitness and the acquaintance graph.
//! * [`contacts`]: the six daily contact configurations and β calibration.
//! * [`epidemic`]: the discrete-day stochastic SIR process and ensembles.
//! * [`metrics`]: reproduction numbers, thresholds, geography and overlap.
//!
//! File formats, configuration and the command line live in the `urbanepi`
//! companion crate.

#![no_std]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod alias;
pub mod contacts;
pub mod epidemic;
mod error;
pub mod metrics;
pub mod network;
pub mod population;
pub mod rng;

pub use error::{Error, Result};
