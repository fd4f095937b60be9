//! Command-line front end for `fracsum-core`: evaluation, residual scans,
//! exponent fits, property checks, benchmarks and the periodic application.

pub mod bench;
pub mod cli;
pub mod scan;

use std::fmt;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const PRECONDITION: i32 = 2;
    pub const SUITE_FAILURE: i32 = 3;
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: exit::USAGE, message: message.into() }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        CliError { code: exit::PRECONDITION, message: message.into() }
    }

    pub fn io(e: impl fmt::Display) -> Self {
        CliError { code: exit::USAGE, message: format!("i/o error: {e}") }
    }
}

impl From<fracsum_core::Error> for CliError {
    fn from(e: fracsum_core::Error) -> Self {
        use fracsum_core::Error::*;
        let code = match e {
            Parse(_) => exit::USAGE,
            _ => exit::PRECONDITION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}
