//! Train one-hidden-layer ReLU approximators for the scalar non-linearities
//! of a transformer block, convert them exactly into piecewise-linear lookup
//! tables, lower the tables to binary16 or INT32, and compose them into
//! Softmax, LayerNorm and GELU operators.

// `!(x > 0.0)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifact;
pub mod cli;
pub mod composite;
pub mod cost;
pub mod error;
pub mod lut;
pub mod metrics;
pub mod net;
pub mod targets;

pub use error::{Error, Result};
