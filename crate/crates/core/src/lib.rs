#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod quantile_sets;
pub mod solvers;
pub mod svc;
pub mod uncertainty;

pub use error::{Error, Result};
