//! Greedy Hessian descent for mixed spherical p-spin glasses.
//!
//! * [`mixture`]: the mixture polynomial and the closed-form theory the
//!   experiments are measured against.
//! * [`hamiltonian`]: sampled disorder, energy, gradient and Hessian on the
//!   ball of radius `sqrt(N)`.
//! * [`optimizer`]: the radial origin-to-sphere path and the on-sphere
//!   variant for pure models.
//! * [`spectrum`]: projected Hessian spectra against the semicircle law.
//! * [`runner`]: configuration, orchestration, trace files and replay.

pub mod error;
pub mod hamiltonian;
pub mod mixture;
pub mod optimizer;
pub mod runner;
pub mod spectrum;

pub use error::{Error, Result};
pub use mixture::Mixture;
