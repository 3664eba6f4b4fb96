//! Experiment harness around `erbo-core`: scenario files, threshold
//! calibration, single episodes, parallel sweeps and their CSV outputs.

pub mod config;
pub mod error;
pub mod output;
pub mod stats;
pub mod sweep;

pub use error::{HarnessError, Result};
