// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

use crate::graph::ValidationReport;

/// Broad failure class, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad or missing input data, failed validation, I/O.
    Data,
    /// A numerical routine failed to converge or produced garbage.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: parse error at `{field}` (line {line}, column {column}): {message}", path.display())]
    Parse {
        path: PathBuf,
        field: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}: invalid graph: {report}", path.display())]
    InvalidGraph {
        path: PathBuf,
        report: ValidationReport,
    },

    #[error("invalid graph: {0}")]
    Validation(ValidationReport),

    #[error("not a DAG")]
    NotDag,

    #[error("PageRank did not converge after {iterations} iterations (last residual {residual:e})")]
    PageRankDiverged { iterations: usize, residual: f64 },

    #[error("no mass: graph is empty")]
    NoMass,

    #[error("no graphs found in {}", .0.display())]
    NoGraphs(PathBuf),

    #[error("missing labels in: {}", .0.join(", "))]
    MissingLabels(Vec<String>),

    #[error("dataset has a single class (correct: {correct}, wrong: {wrong}); both are required")]
    SingleClass { correct: usize, wrong: usize },

    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::PageRankDiverged { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
