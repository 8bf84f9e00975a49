//! Optimal control of a two-atom Rydberg controlled-phase gate with nuclear
//! motion, plus closed-form estimates of atom-chip noise on Rydberg levels.
//!
//! Internal units: ħ = 1, time in ns, length in μm, energies and angular
//! frequencies in rad/ns. Conversion from lab units (MHz, kHz, K) happens in
//! [`units`] and at the configuration boundary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod constants;
pub mod error;
pub mod grid;
pub mod krotov;
pub mod metrics;
pub mod noise;
pub mod propagator;
pub mod state;
pub mod system;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
