//! Linear input-output modeling of coupled cavity-mechanical mode networks.
//!
//! The crate builds frequency-domain scattering matrices for networks of
//! driven cavities parametrically coupled to mechanical modes, and layers the
//! interference-based nonreciprocal devices on top:
//!
//! * [`model`] - network description and parameter helpers;
//! * [`dynamics`] - dynamics matrix assembly, scattering solve, sweeps, and a
//!   time-domain cross-check;
//! * [`isolator`] - the two-cavity, two-mechanical-mode isolator;
//! * [`circulator`] - the three-cavity circulator;
//! * [`noisespec`] - output noise spectra and the reduced two-mode picture.

pub mod circulator;
pub mod dynamics;
pub mod error;
pub mod isolator;
pub mod model;
pub mod noisespec;

pub use error::{Error, Result};
