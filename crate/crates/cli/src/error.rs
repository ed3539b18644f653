use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid {field}: {constraint}")]
    Validation { field: String, constraint: String },

    #[error("numerical failure: {0}")]
    Numerical(#[from] zenoflux::Error),

    /// Results were written but carry a breakdown flag.
    #[error("numerical breakdown flagged: {0}")]
    Breakdown(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Self::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } => 2,
            Self::Validation { .. } => 3,
            Self::Numerical(e) if is_input_error(e) => 3,
            Self::Numerical(_) | Self::Breakdown(_) => 4,
            Self::Io { .. } => 5,
        }
    }
}

/// Core errors that reject the requested setup rather than report a failure
/// of the numerics.
fn is_input_error(e: &zenoflux::Error) -> bool {
    use zenoflux::Error::*;
    matches!(
        e,
        InvalidGrid(_)
            | PacketTruncated { .. }
            | EmptyOverlap { .. }
            | GridMismatch
            | NonFinitePotential { .. }
            | InvalidParameter { .. }
            | UnknownPropagator(_)
            | InitialStateOutsideRegion { .. }
    )
}

pub type Result<T> = std::result::Result<T, CliError>;
