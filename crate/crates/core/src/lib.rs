//! Covert communication over broadcast channels watched by a warden: covert
//! capacities, the time-division optimality condition, converse bounds, the
//! capacity region with key requirements, and a Monte Carlo simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod condition;
pub mod converse;
pub mod error;
pub mod info;
pub mod region;
pub mod sim;
pub mod simplex;

pub use error::{Error, Result};
