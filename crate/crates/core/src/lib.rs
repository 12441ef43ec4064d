//! Randers metrics on homogeneous spheres and the Killing-field
//! constructions that exhibit their isometries.

pub mod cosets;
pub mod error;
pub mod flows;
pub mod geodesy;
pub mod killing;
pub mod matrixcore;
pub mod quaternion;
pub mod randers;
pub mod rng;

pub use error::{Error, Result};
