//! Attendance-modified SIR model for a closed group of children.
//!
//! Infected children either attend (and transmit) or stay home. The crate
//! simulates the dynamics, evaluates the long-run child-days at home in
//! closed form through the Lambert W final-size relation, and finds the
//! attendance rate that maximizes it.

// Range checks are written as `!(x > lo)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;

pub use error::{Error, Result};
