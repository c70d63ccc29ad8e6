//! File formats and command implementations behind the `geoforest` binary.
//!
//! Everything here is deterministic: rerunning any command with the same
//! flags and seed writes byte-identical files (the sweep's wall-clock
//! seconds column is the one documented exception).

pub mod commands;
pub mod error;
pub mod forest_file;
pub mod io;
pub mod seed;

pub use error::CliError;
