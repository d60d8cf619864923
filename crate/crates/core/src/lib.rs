//! Seed-reproducible simulator of an optically controlled quantum-dot hole
//! spin in a detuned microcavity.
//!
//! Unit conventions used across the crate:
//!
//! * frequencies (Zeeman splitting, Rabi frequency Ω/2π, detunings) in Hz
//! * durations in ns, including T1
//! * rates in 1/ns
//! * the laser-flip coefficient in 1/(ns·MHz)
//! * magnetic field in T, optical power in mW
//!
//! Configuration files carry explicit units (`25GHz`, `60ns`) and are
//! converted on load; see [`units`] and [`config`].

// `!(x > 0.0)` is deliberate: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bath;
pub mod cavity;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod noise;
pub mod rng;
pub mod sequence;
pub mod units;

pub use error::{Error, Result};
