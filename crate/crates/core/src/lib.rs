//! Electromagnetic and thermal models of multi-layer load-bearing walls with
//! embedded back-to-back antenna systems.
//!
//! * [`materials`]: material database and ITU power-law permittivity.
//! * [`layered_em`]: plane-wave transfer-matrix solver for layer stacks.
//! * [`fdtd`]: 1-D FDTD cross-check for normal incidence.
//! * [`thermal`]: ISO 6946 U-values and a 3-D finite-volume unit-cell solver.
//! * [`antenna_link`]: dual-coax cable, effective-aperture link model and path combination.
//! * [`inverse`]: measurement normalisation and permittivity fitting.
//! * [`design_sweep`]: antenna-separation study under a U-value limit.
//! * [`scenario`] and [`cli`]: JSON scenarios and the `wallsim` command line.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna_link;
pub mod cli;
pub mod design_sweep;
pub mod error;
pub mod fdtd;
pub mod inverse;
pub mod layered_em;
pub mod materials;
pub mod scenario;
pub mod thermal;
pub mod units;

pub use error::{Error, Result};
