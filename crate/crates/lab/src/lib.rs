//! Parallel drivers, file formats and the `rmf-lab` command line on top of
//! [`steinhaus_core`].

pub mod artifact;
pub mod cli;
pub mod error;
pub mod parallel;
pub mod setarg;

pub use error::LabError;
