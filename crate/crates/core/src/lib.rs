// negated comparisons below are deliberate: they reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod cli;
pub mod error;
pub mod mental_chain;
pub mod numeric;
pub mod oracle;
pub mod props;
pub mod scenarios;
pub mod signal_model;
pub mod sweep;
pub mod welfare;

pub use error::{Error, Result};
