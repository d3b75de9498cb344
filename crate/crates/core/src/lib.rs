//! Numerical laboratory for the perturbed Vafa-Witten equations on a flat
//! lattice 4-torus.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod fiber;
pub mod lattice;
pub mod lemmas;
pub mod rng;
pub mod solver;
pub mod spectrum;
pub mod vw;

pub use error::{Result, VwError};
