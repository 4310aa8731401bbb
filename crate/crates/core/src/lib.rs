//! Simulation and analysis toolkit for an on-off keyed molecular diffusion
//! link through confined pipe networks.
//!
//! * [`diffusion`]: closed-form channel (hit concentration, capture fraction).
//! * [`oracle`]: brute-force Brownian walkers used to check the closed forms.
//! * [`pulse`]: pulse and pulse-train synthesis, trace ingest, delay spread.
//! * [`propagation`]: empirical radio and molecular laws for pipe topologies.
//! * [`link`]: error rate, throughput, rate surface and OOK Monte Carlo.
//! * [`cli`]: the `molcomm` command-line front end.

// `!(x > 0.0)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diffusion;
pub mod equipment;
pub mod error;
pub mod link;
pub mod oracle;
pub mod propagation;
pub mod pulse;

pub use error::{Error, Result};
