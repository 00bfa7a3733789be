#![cfg_attr(not(feature = "std"), no_std)]
//! Pitman-Yor mixture samplers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod gmddp;
pub mod linalg;
pub mod math;
pub mod model;
pub mod pyprocess;
pub mod rng;
pub mod samplers;
pub mod synthetic;
pub mod truncation;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};

/// Crate version, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
