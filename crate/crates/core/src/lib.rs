//! Finite-difference solver for the diffusive Hindmarsh-Rose system and its
//! partly diffusive and ODE reductions, together with checks of the
//! dissipativity estimates along computed trajectories.

pub mod analysis;
pub mod config;
pub mod convergence;
pub mod error;
pub mod grid;
pub mod integrate;
pub mod model;

pub use error::{HrError, Result};
