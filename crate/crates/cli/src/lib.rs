//! File formats, reports and command implementations behind the `cstarcat`
//! binary.

pub mod commands;
pub mod error;
pub mod format;
pub mod report;

pub use error::{CliError, EXIT_FAIL, EXIT_INPUT, EXIT_PASS};
