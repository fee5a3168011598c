//! Simulation and analysis of two-photon interference between phase-shaped
//! single-photon wave packets.
//!
//! The crate models a pulsed single-photon stream split by a polarising beam
//! splitter into an electro-optic-modulator path and a one-period delay path,
//! recombined on a balanced beam splitter and time-tagged by two detectors.
//! Exact quadrature of the two-photon detection densities lives in
//! [`interference`]; the Monte Carlo experiment in [`detection`]; the data
//! reductions (temporal-half ratios, visibility fits, quantum beats, g²) in
//! [`analysis`].
//!
//! Units throughout: time in ns, frequency in MHz, phase in radians,
//! voltage in V.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibration;
pub mod cli;
pub mod config;
pub mod detection;
pub mod error;
pub mod exec;
pub mod grid;
pub mod interference;
pub mod io;
pub mod phase;
pub mod source;

pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::{TimeGrid, WavePacket};
pub use phase::{EomCalibration, PhaseProfile};

/// Converts MHz·ns products to cycles.
pub const MHZ_NS: f64 = 1e-3;

/// Standard deviation of a Gaussian intensity profile with the given FWHM.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

pub fn sigma_to_fwhm(sigma: f64) -> f64 {
    sigma * 2.0 * (2.0 * std::f64::consts::LN_2).sqrt()
}
