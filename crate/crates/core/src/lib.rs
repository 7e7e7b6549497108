//! Simulation laboratory for lattice gradient interface models with quenched
//! disorder: geometry, potentials, Gibbs sampling, Green functions, coupled
//! dynamics, and the statistical estimators that tie them together.

pub mod coupling;
pub mod disorder;
pub mod error;
pub mod estimators;
pub mod field;
pub mod gaussian;
pub mod gibbs;
pub mod gradient;
pub mod green;
pub mod io;
pub mod lattice;
pub mod potential;
pub mod rng;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
