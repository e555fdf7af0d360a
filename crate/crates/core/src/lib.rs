//! Numerical toolkit for Strichartz-type space-time estimates of the
//! Schrödinger flow on spheres.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod harmonics;
pub mod norms;
pub mod potential;
pub mod rng;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
