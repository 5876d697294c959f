//! File formats and the command-line front end for `exoci-core`: panel CSV
//! input, grid files, CSV result tables and run manifests.

pub mod cli;
pub mod error;
pub mod gridfile;
pub mod manifest;
pub mod panel_csv;
pub mod results;

pub use error::{CliError, Result};
