// SPDX-License-Identifier: MIT OR Apache-2.0

use attrgraph_core::ErrorKind;
use attrgraph_detector::DetectorError;
use attrgraph_intervene::InterventionError;

/// Front-end failure, one variant per exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn by_kind(kind: ErrorKind, msg: String) -> CliError {
    match kind {
        ErrorKind::Data => CliError::Data(msg),
        ErrorKind::Numerical => CliError::Numerical(msg),
    }
}

impl From<attrgraph_core::Error> for CliError {
    fn from(e: attrgraph_core::Error) -> Self {
        by_kind(e.kind(), e.to_string())
    }
}

impl From<DetectorError> for CliError {
    fn from(e: DetectorError) -> Self {
        by_kind(e.kind(), e.to_string())
    }
}

impl From<InterventionError> for CliError {
    fn from(e: InterventionError) -> Self {
        match e {
            InterventionError::UnnormalizedRow(_) | InterventionError::DegenerateRow => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
