//! Statistical learning from rate-limited descriptions of training data, on
//! finite alphabets.
//!
//! The crate provides the Type I scheme (encoder sees whole training pairs
//! and quantizes their empirical distribution onto an ε-net) and the Type II
//! scheme (encoder sees only outputs and applies a minimax output-sequence
//! quantizer), the operational distortion-rate function, its
//! information-theoretic lower bound, and Monte Carlo machinery to check the
//! achievability inequalities numerically.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod covering;
pub mod error;
pub mod itbounds;
pub mod losses;
pub mod measures;
pub mod montecarlo;
pub mod type1;
pub mod type2;

pub use error::{Error, Result};
