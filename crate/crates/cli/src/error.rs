use std::path::PathBuf;

use thiserror::Error;

/// Everything that can stop a run. Each variant maps to one exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    /// Malformed JSON or coefficient expression.
    #[error("parse error in {field} at line {line}, column {column} near `{token}`: {message}")]
    Parse { field: String, line: usize, column: usize, token: String, message: String },

    #[error("invalid scenario field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(cor_forge::Error),

    /// At least one verification residual exceeded its tolerance.
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation { field: field.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Validation { .. } | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<cor_forge::Error> for CliError {
    fn from(e: cor_forge::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::validation("scenario", e.to_string())
        }
    }
}
