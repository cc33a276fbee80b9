// SPDX-License-Identifier: MIT OR Apache-2.0

#[derive(Debug, thiserror::Error)]
pub enum InterventionError {
    #[error("invalid intervention plan: {0}")]
    Config(String),
    #[error("invalid region map: {0}")]
    Regions(String),
    #[error("character {0:?} is outside the model vocabulary")]
    UnknownChar(char),
    #[error("sequence length {len} exceeds the model context of {max}")]
    ContextOverflow { len: usize, max: usize },
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("attention row does not sum to one (sum {0})")]
    UnnormalizedRow(f64),
    #[error("degenerate attention row")]
    DegenerateRow,
    #[error("capture shapes differ: {0}")]
    ShapeMismatch(String),
}

pub type Result<T, E = InterventionError> = std::result::Result<T, E>;
