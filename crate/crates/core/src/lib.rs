//! Simulation and analysis toolkit for four-dimensional quantum key
//! distribution over multicore fiber with silicon photonic transmitter and
//! receiver chips.

// Range checks are written as `!(x >= lo)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod chipmodel;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod protocol;
pub mod qstate;
pub mod roots;
pub mod security;

pub use error::{Error, Result};
