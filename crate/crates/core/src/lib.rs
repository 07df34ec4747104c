//! Uniform synchronization by groups for coupled damped second-order systems.
//!
//! The crate has two halves. [`algebra`] works with the coupling matrices
//! alone: the difference matrix `C_p`, compatibility conditions, rank
//! conditions and the reduced and limit couplings. The remaining modules turn
//! a scalar model on the unit interval into an `N`-component semi-discrete
//! system, integrate it and measure how fast the groups synchronize.

// NaN must fail positivity checks, and banded kernels index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod commands;
pub mod csvio;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod models;
pub mod scenario;

pub use error::{Error, Result};
