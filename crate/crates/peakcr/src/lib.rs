//! IO, configuration, reporting and parallel drivers for the `peakcr`
//! command-line tool; the numerics live in `peakcr-core`.

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod runner;

pub use error::{CliError, CliResult};
