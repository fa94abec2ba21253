//! Guaranteed-distance decoding with preprocessing (GDDP).
//!
//! The crate is organized around four layers:
//!
//! * [`lattice`] exact bases, Gram-Schmidt data, LLL, Babai nearest-plane and
//!   Fincke-Pohst enumeration;
//! * [`gaussian`] discrete Gaussian masses with certified truncation error,
//!   smoothing-parameter estimation and two samplers;
//! * [`gddp`] the iterative decoder: preprocessing by discrete Gaussian
//!   samples at the smoothing parameter and the norm-contracting query loop;
//! * [`lab`] exact numerical checks of the inequalities the decoder's
//!   correctness rests on, plus epsilon-nets of the sphere.

pub mod error;
pub mod gaussian;
pub mod gddp;
pub mod io;
pub mod lab;
pub mod lattice;
pub mod limits;
pub mod rational;

pub use error::{Error, Result};
