//! Radial degree-one Ginzburg-Landau vortices on the unit ball.

pub mod angular;
pub mod cli;
pub mod energy;
pub mod error;
pub mod mesh;
pub mod oracle;
pub mod perturbation;
pub mod potential;
pub mod profile;
pub mod spectral;

pub use error::{Error, Result};
