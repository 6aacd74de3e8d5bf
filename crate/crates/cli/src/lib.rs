//! Experiment runner for `urbanepi-core`: TOML configuration, CSV formats,
//! the run manifest and a rayon-backed replica executor.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod executor;
pub mod experiment;
pub mod io;
pub mod manifest;

pub use config::ExperimentConfig;
pub use error::CliError;
