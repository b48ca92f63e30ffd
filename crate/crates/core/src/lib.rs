// negated comparisons below deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod circular_stats;
pub mod error;
pub mod indicators;
pub mod market_data;
pub mod minmax;
pub mod phase_shift;
pub mod pipeline;
pub mod report;
pub mod special;
pub mod synthetic;

pub use error::{Error, Result};
