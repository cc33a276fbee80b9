// SPDX-License-Identifier: MIT OR Apache-2.0

//! Layer-wise attention control during decoding.
//!
//! [`plan`] defines the region-aware scaling rules and the row hook;
//! [`toy`] provides a seeded character-level transformer that applies the
//! hook between softmax and value aggregation and records region-aggregated
//! attention before and after it.

pub mod error;
pub mod plan;
pub mod toy;

pub use error::{InterventionError, Result};
pub use plan::{apply_hook, InterventionPlan, RegionMap, TokenRegion};
pub use toy::{decode_with_control, rag_prompt, routing_shift_report, Decoded, ToyConfig, ToyTransformer};
