//! Outage probability and achievable sum-rate of an interference-limited
//! multiuser RF / FSO two-way amplify-and-forward relay.

pub mod channels;
pub mod cli;
pub mod error;
pub mod mc;
pub mod metrics;
pub mod specfun;

pub use error::{Error, Result};
