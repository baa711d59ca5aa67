//! Simulation of over-the-air federated learning with uplink
//! retransmissions: optimal transmit power control, analog aggregation,
//! a federated training loop, convergence bounds and a budget-aware choice
//! of the number of retransmissions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aircomp;
pub mod bounds;
pub mod channel;
pub mod data;
pub mod error;
pub mod harness;
pub mod learner;
pub mod mselect;
pub mod powerctl;
pub mod rng;

pub use error::{Error, Result};
