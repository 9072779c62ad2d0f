//! Discrete Griffith energies for nonsimple brittle materials.

pub mod catalog;
pub mod energy;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod linearize;
pub mod minimize;
pub mod rigidity;
pub mod sparse;
pub mod stats;

pub use error::{Error, Result};
