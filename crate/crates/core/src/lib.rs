#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arm;
pub mod cerebellum;
pub mod coding;
pub mod controller;
pub mod diffmap;
mod error;
pub mod harness;
pub mod metrics;
pub mod snn;

pub use error::{Error, Result};
