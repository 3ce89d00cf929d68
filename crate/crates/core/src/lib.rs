//! Finite element toolkit for two-sublattice antiferromagnets.

pub mod cli;
pub mod energy;
pub mod error;
pub mod fem;
pub mod fields;
pub mod flow;
pub mod io;
pub mod llg;
pub mod mesh;
pub mod nondim;
pub mod sparse;
pub mod tangent;
pub mod verify;

pub use error::{Error, Result};
