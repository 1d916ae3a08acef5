//! Simulation and analysis toolkit for an all-optical satellite red-shift
//! test and for spin-gravity weak-value amplification.
//!
//! The crate is organised bottom-up:
//!
//! - [`ephemeris`]: CPF-style position tables and Lagrange interpolation.
//! - [`kinematics`]: platform trajectories, light-time and link geometry.
//! - [`link_model`]: relativistic frequency ratios, interferometric phases
//!   and the Doppler-cancelling signal `S = phi_SC - phi_GS / 2`.
//! - [`interferometer`]: the two-MZI time-bin cascade, photon counting and
//!   fringe fitting.
//! - [`scenario`]: pass set-up and per-epoch geometry sweeps.
//! - [`estimator`]: weighted least-squares recovery of the red-shift
//!   violation parameter and Monte Carlo precision forecasts.
//! - [`spin_weak`]: spin-rotation/spin-acceleration Hamiltonians, exact
//!   small-dimension evolution, weak values and meter kicks.

pub mod constants;
pub mod ephemeris;
pub mod estimator;
pub mod interferometer;
pub mod kinematics;
pub mod link_model;
pub mod scenario;
pub mod spin_weak;
pub mod table;

pub use nalgebra::Vector3;
