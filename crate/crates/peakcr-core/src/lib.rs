//! Peak localization and confidence ellipsoids for lattice convolution fields.
//!
//! Repeated noisy observations on a regular lattice are turned into smooth
//! convolution fields with analytic derivatives. From a cohort of such fields
//! the crate assembles sample mean, variance, t-statistic and Cohen's d fields,
//! locates their peaks by Newton refinement, estimates the gradient/Hessian
//! covariance objects, and builds asymptotic and Monte Carlo confidence
//! ellipsoids for the true peak locations. A simulation harness verifies
//! coverage and the supporting distributional identities, and a Welch module
//! turns time series into power-spectrum fields that feed the same pipeline.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats and the CLI live in
//! the companion `peakcr` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![warn(missing_docs)]
// `!(x > 0.0)` is used for validation on purpose: unlike `x <= 0.0`, it
// also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod covariance;
pub mod error;
pub mod field;
pub mod grid_field;
pub mod linalg;
pub mod noisegen;
pub mod peaks;
pub mod regions;
pub mod rng;
pub mod sample_fields;
pub mod simharness;
pub mod special;
pub mod welch;

pub use error::{Error, Result};
