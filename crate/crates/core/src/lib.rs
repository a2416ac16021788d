//! Simulation of modulo hysteresis sampling and recovery of bandlimited
//! signals from folded samples by sparse recovery in the Fourier domain.
//!
//! - [`signal`]: random Paley-Wiener test signals and admissibility checks.
//! - [`encoder`]: ideal, generalized and modified modulo hysteresis encoders.
//! - [`spectral`]: differences, DFT, band layout, Vandermonde dictionary.
//! - [`sparse`]: OMP and SAOMP.
//! - [`pipeline`]: reconstruction and simulated end-to-end trials.
//! - [`experiments`]: demo, encoder comparison and parameter sweep outputs.
//! - [`selftest`]: fast invariant checks.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod encoder;
pub mod error;
pub mod experiments;
pub mod pipeline;
pub mod plot;
pub mod selftest;
pub mod signal;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
