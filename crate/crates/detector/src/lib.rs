// SPDX-License-Identifier: MIT OR Apache-2.0

//! Structural faithfulness detector for attribution graphs.
//!
//! Graphs are featurized ([`features`]), encoded by a small graph transformer
//! ([`model`]) and classified as faithful (`p >= 0.5`) or not. Training uses
//! AdamW over a fixed filename-ranked split ([`split`]); gradients come from
//! the reverse-mode tape in [`tape`].

pub mod error;
pub mod eval;
pub mod features;
pub mod model;
pub mod split;
pub mod tape;
pub mod train;

pub use error::{DetectorError, Result};
pub use features::{build_features, GraphFeatures};
pub use model::{predict_label, DetectorModel, ModelConfig};
pub use train::{train, Example, TrainConfig, TrainingLog};

use attrgraph_core::io::DatasetEntry;
use rayon::prelude::*;

/// Featurizes labeled entries, failing on the first unlabeled one.
pub fn examples_from_entries(entries: &[DatasetEntry]) -> Result<Vec<Example>> {
    if let Some(e) = entries.iter().find(|e| e.graph.label.is_none()) {
        return Err(DetectorError::Unlabeled { path: e.path.clone() });
    }
    entries
        .par_iter()
        .map(|e| {
            Ok(Example {
                id: e.example_id(),
                features: build_features(&e.graph)?,
                label: e.graph.label.expect("checked above"),
            })
        })
        .collect()
}
