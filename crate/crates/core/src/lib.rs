//! Simulation and analysis of Bell tests performed on classical stochastic
//! optical fields.
//!
//! A partially polarized beam is modelled as a finite ensemble of random
//! two-component complex amplitudes. Its polarization and its amplitude
//! statistics ("function space") are two degrees of freedom that admit a
//! two-term Schmidt decomposition, and correlations between rotated bases of
//! the two spaces violate the CHSH inequality whenever the beam is not fully
//! polarized.
//!
//! Modules, bottom up:
//!
//! * [`ensemble`], [`polarization`], [`schmidt`], [`tomography`]: the field
//!   model and its second-order statistics.
//! * [`optics`]: polarizers, wave plates, beam splitters and the stripping
//!   angle that isolates one function-space component.
//! * [`bell`]: closed-form joint probabilities, correlations, CHSH search and
//!   local hidden variable models.
//! * [`interferometer`]: the shutter-sequenced Mach-Zehnder measurement,
//!   correlation scans and the full CHSH protocol.
//! * [`estimator`]: the three interchangeable joint-probability paths
//!   (closed form, direct projection, interferometric) behind one trait.
//! * [`cli`]: the `fieldbell` command-line front end.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod interferometer;
pub mod optics;
pub mod polarization;
pub mod rng;
pub mod schmidt;
pub mod tomography;

pub use error::{Error, Result};

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;
