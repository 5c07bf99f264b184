//! Bosons tunnelling from a harmonic trap over a tunable threshold into
//! open space: exact few-body and mean-field dynamics, reduced densities and
//! correlators, and the energetics model of the emission process.

pub mod error;
pub mod lattice;
pub mod model;
pub mod observables;
pub mod potential;
pub mod solver;

pub use error::{Error, Result};
