//! Transmit-power minimization for IRS-assisted secure multigroup multicast.

pub mod cli;
pub mod error;
pub mod harness;
pub mod model;
pub mod problem;
pub mod scenario;
pub mod sdr;
pub mod socp;
pub mod trace;
pub mod units;

pub use error::{Error, Result};
