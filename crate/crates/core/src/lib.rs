//! Positive-P simulation and closed-form verification of noncritical
//! quadrature squeezing generated by spontaneous symmetry breaking.
//!
//! The crate is organised by physical system:
//!
//! * [`engine`]: generic Itô SDE integration (semi-implicit midpoint),
//!   trajectory ensembles and noise-spectrum estimation.
//! * [`modes`]: Gauss, Laguerre-Gauss and rotated Hermite-Gauss transverse modes.
//! * [`dopo`]: the two-transverse-mode degenerate OPO, its orientation
//!   diffusion, dark-mode spectra, fixed local oscillator and seeded variants.
//! * [`fwm`]: mean-field analysis of the rotationally symmetric four-wave-mixing cavity.
//! * [`spatial`]: one-dimensional translational symmetry breaking in a
//!   large-aperture DOPO.
//! * [`jcm`]: the single-photon-pair Jaynes-Cummings model in Fock space.

pub mod csv;
pub mod dopo;
pub mod engine;
pub mod error;
pub mod fwm;
pub mod jcm;
pub mod linalg;
pub mod modes;
pub mod spatial;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
