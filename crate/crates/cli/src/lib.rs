//! File formats, command implementations and SVG rendering behind the
//! `gstrip` binary. Exit codes: 0 success, 1 parse or file-format error,
//! 2 precondition (including dimension mismatches), 3 invariant failure,
//! 4 budget exceeded.

pub mod commands;
pub mod formats;
pub mod render;
pub mod sets;

use gstrip_core::error::Error;

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn parse(message: String) -> CliError {
        CliError { code: 1, message }
    }

    pub fn precondition(message: String) -> CliError {
        CliError { code: 2, message }
    }

    pub fn invariant(message: String) -> CliError {
        CliError { code: 3, message }
    }

    pub fn dimension(expected: usize, got: usize) -> CliError {
        CliError {
            code: 2,
            message: format!("dimension mismatch: expected {expected}, got {got}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        let code = match &e {
            Error::DimensionMismatch { .. } => 2,
            Error::Precondition(_) | Error::Degenerate(_) => 2,
            Error::SolverStall { .. } | Error::Invariant(_) => 3,
            Error::Budget(_) => 4,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}
