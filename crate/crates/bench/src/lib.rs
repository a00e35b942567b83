//! Experiment harness: wires policies to environments, runs seeded
//! batches and writes CSV traces with JSON sidecars.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod fixture;
pub mod output;
pub mod sim;
pub mod stats;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{BenchError, Result};
