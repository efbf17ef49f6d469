//! Batch experiments for the sawtooth-ladder toolkit: configuration, the
//! quench/sweep/spectrum/locstate/lifetime pipelines and CSV output.

pub mod args;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use error::{CliError, Result};
