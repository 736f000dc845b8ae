use std::path::PathBuf;

use thiserror::Error;

use crate::density::DensityError;
use crate::eval::EvalError;
use crate::filter::FilterError;
use crate::signal::SignalError;
use crate::synth::ScenarioError;
use crate::trace::FormatError;

/// Coarse error classes. Command-line front ends map these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Io,
    Validation,
    Data,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Signal(_) | Error::Density(_) | Error::Filter(_) => ErrorCategory::Data,
            Error::Format(FormatError::Empty) | Error::Format(FormatError::TooFewRows { .. }) => {
                ErrorCategory::Data
            }
            Error::Scenario(_) | Error::Eval(_) | Error::Format(_) | Error::Config(_) => {
                ErrorCategory::Validation
            }
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
