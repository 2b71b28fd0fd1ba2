//! Spend-plan estimation and episodic adaptive budget pacing for repeated
//! second-price auctions.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod pacing;
pub mod quadrature;
pub mod rng;
pub mod spendplan;

pub use error::{Error, Result};
