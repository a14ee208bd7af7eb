//! Slow-time code design for distributed MIMO radar networks.
//!
//! Each frame, every node picks a unit-energy slow-time code close to a
//! reference code so that the trace of the tracking PCRLB is as small as
//! possible. See the crate README for the command-line harness.

pub mod error;
pub mod harness;
pub mod lift;
pub mod math;
pub mod optimizer;
pub mod signal;
pub mod tracking;
pub mod verify;

pub use error::{Error, Result};
