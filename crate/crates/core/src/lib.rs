// SPDX-License-Identifier: MIT OR Apache-2.0

//! Structural analysis of attribution graphs from retrieval-augmented generation runs.
//!
//! - [`graph`]: data model, region taxonomy and invariant checking.
//! - [`io`]: JSON wire format and dataset directories.
//! - [`metrics`]: longest path, degree statistics, triad census, PageRank and
//!   the six-metric [`metrics::StructuralSignature`].
//! - [`profile`]: layer-wise attribution mass.
//! - [`routing`]: region-to-region routing tensors per layer.
//! - [`synth`]: labeled synthetic graphs with contrasting structure.
//! - [`report`]: CSV reports with a provenance header line.

pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod profile;
pub mod report;
pub mod routing;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use graph::{AttributionGraph, Edge, Label, Node, Region, ValidationReport, Violation};
pub use metrics::{structural_signature, PageRankOptions, StructuralSignature};
