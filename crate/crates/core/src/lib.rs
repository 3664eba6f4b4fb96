//! Uncertainty-triggered emergency response for autonomous agents.
//!
//! A rolling reconstruction-error signal is extrapolated to detect when the
//! agent is entering unfamiliar territory; a Gaussian-process Bayesian
//! optimizer then searches, online, for the action that drives the error
//! rate down. The [`sim`] and [`episode`] modules provide a small planar
//! driving world to exercise both halves end to end.

#![no_std]

extern crate alloc;

pub mod acquisition;
pub mod detector;
pub mod episode;
pub mod error;
pub mod gp;
pub mod responder;
pub mod sim;

pub use error::{Error, Result};
