//! Surge motion of a ship in following seas.
//!
//! The crate covers the deterministic regular-wave problem (phase portraits,
//! surf-riding and wave-blocking thresholds), three irregular-sea surge
//! models of decreasing fidelity (full superposition force,
//! representative-wavenumber force, white-noise SDE), the analytic
//! stationary density of the white-noise model and the ensemble statistics
//! used to compare them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deterministic;
pub mod error;
pub mod fpk;
pub mod numerics;
pub mod rng;
pub mod seaway;
pub mod ship_model;
pub mod stats;
pub mod stochastic;
pub mod surge;

pub use error::{Error, Result};
