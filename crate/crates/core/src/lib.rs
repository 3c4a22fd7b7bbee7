//! Numerical core for modelling a single trapped atom coupled to a focused
//! light beam without a cavity.
//!
//! The crate is `no_std` (it needs `alloc`) so the models can be embedded
//! anywhere; file formats, configuration and the command line live in the
//! `atomlens` companion crate.
//!
//! * [`focalfield`]: focal field of a circularly polarized Gaussian beam behind
//!   an ideal lens and the resulting scattering probability.
//! * [`stark`]: AC-Stark shifts of the ⁸⁷Rb D2 stretched states in a circular
//!   dipole trap.
//! * [`spectroscopy`]: extinction/transmission relations, Lorentzian fitting
//!   and optical loss chains.
//! * [`correlation`]: resonance-fluorescence g²(τ), photon stream simulation
//!   and coincidence histograms.
//! * [`sequence`]: Monte Carlo of the trapping-event measurement sequence and
//!   its data reduction.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod angmom;
pub mod consts;
pub mod correlation;
mod error;
pub mod focalfield;
pub mod quadrature;
pub mod rng;
pub mod sequence;
pub mod spectroscopy;
pub mod stark;

pub use error::{Error, Result};
