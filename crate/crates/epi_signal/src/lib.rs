//! SVEAIR epidemic dynamics coupled to a two-bit sender/receiver signaling
//! game, with an adaptive public-health policy loop on top.

pub mod config;
pub mod epi_core;
pub mod equilibria;
pub mod error;
pub mod output;
pub mod policy;
pub mod signaling;
pub mod simulation;
pub mod smoothing;

pub use error::{Error, Result};
