// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON wire format and dataset directories.
//!
//! One graph per UTF-8 JSON file. A dataset is a directory of `*.graph.json`
//! files, always visited in lexicographic filename order.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::AttributionGraph;

/// File suffix identifying graph files inside a dataset directory.
pub const GRAPH_SUFFIX: &str = ".graph.json";

/// Parses a graph from JSON text without validating it.
///
/// Nodes are sorted by id and parallel edges are summed.
pub fn parse_graph(text: &str, path: &Path) -> Result<AttributionGraph> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut graph: AttributionGraph = serde_path_to_error::deserialize(de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        Error::Parse {
            path: path.to_path_buf(),
            field,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    graph.nodes.sort_by_key(|n| n.id);
    graph.presum_parallel_edges();
    Ok(graph)
}

/// Reads and validates one graph file.
pub fn load_graph(path: impl AsRef<Path>) -> Result<AttributionGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let graph = parse_graph(&text, path)?;
    let report = graph.validate();
    if !report.is_valid() {
        return Err(Error::InvalidGraph {
            path: path.to_path_buf(),
            report,
        });
    }
    Ok(graph)
}

/// Serializes a graph to its canonical JSON text (compact, newline-terminated).
pub fn graph_to_json(graph: &AttributionGraph) -> String {
    let mut s = serde_json::to_string(graph).expect("graph serialization is infallible");
    s.push('\n');
    s
}

/// Writes a graph; the graph must already be valid.
pub fn save_graph(graph: &AttributionGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let report = graph.validate();
    if !report.is_valid() {
        return Err(Error::InvalidGraph {
            path: path.to_path_buf(),
            report,
        });
    }
    fs::write(path, graph_to_json(graph)).map_err(|e| Error::io(path, e))
}

/// Lists `*.graph.json` files of a dataset directory in lexicographic order.
pub fn list_graph_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        if name.to_string_lossy().ends_with(GRAPH_SUFFIX) {
            files.push(entry.path());
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// A graph together with the file it came from.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub graph: AttributionGraph,
}

impl DatasetEntry {
    /// File name without the `.graph.json` suffix.
    pub fn stem(&self) -> String {
        let name = self
            .path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        name.strip_suffix(GRAPH_SUFFIX).unwrap_or(&name).to_string()
    }

    /// `meta.example_id` when present, otherwise the file stem.
    pub fn example_id(&self) -> String {
        self.graph
            .meta
            .get("example_id")
            .cloned()
            .unwrap_or_else(|| self.stem())
    }
}

/// Loads every graph of a dataset directory. Fails on an empty directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Vec<DatasetEntry>> {
    let dir = dir.as_ref();
    let files = list_graph_files(dir)?;
    if files.is_empty() {
        return Err(Error::NoGraphs(dir.to_path_buf()));
    }
    load_files(&files)
}

/// Loads the given files in parallel, preserving order.
pub fn load_files(files: &[PathBuf]) -> Result<Vec<DatasetEntry>> {
    files
        .par_iter()
        .map(|path| {
            load_graph(path).map(|graph| DatasetEntry {
                path: path.clone(),
                graph,
            })
        })
        .collect()
}
