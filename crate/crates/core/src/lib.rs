//! Visibility dynamics of a qubit coupled to a harmonic oscillator through
//! `H = ω a†a + g (a + a†) σ_z`: closed forms, a master-equation engine, a
//! monotonicity check for separable channels, and experiment sizing.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod analytic;
pub mod channel;
pub mod config;
pub mod design;
pub mod error;
pub mod export;
pub mod lindblad;
pub mod units;

pub use error::{Error, Result};
