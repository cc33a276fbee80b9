// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use attrgraph_core::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum DetectorError {
    #[error(transparent)]
    Core(#[from] attrgraph_core::Error),
    #[error("cannot build features for an empty graph")]
    EmptyGraph,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("class deficit: need at least {needed} graphs per class, found {correct} correct and {wrong} wrong")]
    ClassDeficit { needed: usize, correct: usize, wrong: usize },
    #[error("{path}: unlabeled graph cannot be used for training or evaluation")]
    Unlabeled { path: PathBuf },
    #[error("index entry `{0}` has no matching graph file")]
    IndexMismatch(String),
    #[error("{path}: malformed index file: {message}")]
    Index { path: PathBuf, message: String },
    #[error("model file version {found} is not supported (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },
    #[error("{path}: invalid model file: {message}")]
    ModelFormat { path: PathBuf, message: String },
    #[error("{path}: invalid baseline verdicts: {message}")]
    Baseline { path: PathBuf, message: String },
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DetectorError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            DetectorError::Core(e) => e.kind(),
            DetectorError::NonFiniteLoss { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DetectorError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = DetectorError> = std::result::Result<T, E>;
