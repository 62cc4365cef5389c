use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Library(#[from] laserchan::Error),

    #[error("truncation overflow at t = {t}: {source} (ceiling {ceiling}; raise it with `max_dim` or LASERCHAN_MAX_DIM)")]
    Truncation {
        t: f64,
        ceiling: usize,
        source: laserchan::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// `validate` ran but at least one check failed.
    #[error("{0} validation check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Truncation { .. } | CliError::Library(laserchan::Error::TruncationOverflow { .. }) => {
                ExitCode::from(2)
            }
            _ => ExitCode::from(1),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
