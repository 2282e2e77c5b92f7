//! Numerical laboratory for the n-body problem with power-law interactions.
//!
//! The crate evaluates the n-body vector field and its first integrals,
//! integrates orbits with a high-order adaptive scheme and event location,
//! finds and classifies central configurations, computes stability spectra
//! and Morse/vertical diagnostics of relative equilibria, extracts syzygy
//! sequences of the planar zero-angular-momentum three-body problem, and
//! counts stationary points of the squared distance between two confocal
//! ellipses.

pub mod cc;
pub mod dynamics;
pub mod ellipse;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod io;
pub mod oracles;
pub mod rng;
pub mod stability;
pub mod syzygy;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use system::{Configuration, MassSystem, PhaseState};
