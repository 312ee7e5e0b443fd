//! Uplink cell-free massive MIMO simulation.
//!
//! The pipeline runs in the order of the modules below: a [`scenario`] drop
//! places APs and UEs, [`channel`] turns the geometry into large- and
//! small-scale fading (or ingests a measured dataset), [`estimation`] runs the
//! pilot phase and produces MMSE channel estimates, [`combining`] builds MR or
//! centralized MMSE receive weights, [`metrics`] evaluates per-UE SINR, SE and
//! EE, and [`tpc`] chooses the uplink transmit powers. [`harness`] drives
//! Monte-Carlo campaigns over all of it.

pub mod channel;
pub mod combining;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod metrics;
pub mod scenario;
pub mod tpc;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type Cx = num_complex::Complex64;
/// Antenna-by-UE complex matrix (channels, estimates, weights).
pub type CMatrix = nalgebra::DMatrix<Cx>;
/// Antenna-by-UE real matrix (large-scale gains, error variances).
pub type RMatrix = nalgebra::DMatrix<f64>;
