//! Exact finite presentations of topological dynamical systems.

pub mod catalog;
pub mod cli;
pub mod counterexample;
pub mod error;
pub mod fixtures;
pub mod independence;
pub mod meanstats;
pub mod numeric;
pub mod relations;
pub mod report;
pub mod systems;
pub mod zplus;

pub use catalog::SystemSpec;
pub use error::{Error, Result};
pub use numeric::{CylPoint, Enclosure, Rational};
pub use systems::{Point, SystemPresentation};
