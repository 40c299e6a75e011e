#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod fkpp;
pub mod geometry;
pub mod rate_fn;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
