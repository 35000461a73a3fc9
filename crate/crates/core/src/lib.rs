//! Finite-alphabet perception-distortion analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod divergence;
pub mod error;
pub mod estimators;
mod flow;
pub mod gaussian;
pub mod model;
pub mod plane;
pub mod tradeoff;

pub use error::{Error, Result};
