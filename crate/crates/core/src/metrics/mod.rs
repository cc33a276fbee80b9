// SPDX-License-Identifier: MIT OR Apache-2.0

//! Graph-level structural metrics and class-level signature comparison.

mod dag;
mod pagerank;
mod triad;

pub use dag::{dag_longest_path, degree_stats};
pub use pagerank::{max_pagerank, pagerank, PageRankOptions};
pub use triad::{
    choose3, triad_census, triad_census_dense, triad_census_sparse, triad_fractions, TriadCensus,
    TriadType, DENSE_CENSUS_MAX_NODES,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributionGraph, Label};
use crate::io::DatasetEntry;

/// The six-metric summary of one graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralSignature {
    pub dag_l: usize,
    pub avg_deg: f64,
    pub density: f64,
    pub t_disc: f64,
    pub t_branch: f64,
    pub max_pr: f64,
}

impl StructuralSignature {
    pub const NAMES: [&'static str; 6] = ["dag_l", "avg_deg", "density", "t_disc", "t_branch", "max_pr"];

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.dag_l as f64,
            self.avg_deg,
            self.density,
            self.t_disc,
            self.t_branch,
            self.max_pr,
        ]
    }
}

/// Computes all six metrics. The graph must be a non-empty DAG.
pub fn structural_signature(
    graph: &AttributionGraph,
    pr_opts: &PageRankOptions,
) -> Result<StructuralSignature> {
    if graph.node_count() == 0 {
        return Err(Error::NoMass);
    }
    let dag_l = dag_longest_path(graph)?;
    let (avg_deg, density) = degree_stats(graph);
    let (t_disc, t_branch) = triad_fractions(graph);
    let max_pr = max_pagerank(graph, pr_opts)?;
    Ok(StructuralSignature {
        dag_l,
        avg_deg,
        density,
        t_disc,
        t_branch,
        max_pr,
    })
}

/// Signatures of a whole dataset, in dataset order.
pub fn dataset_signatures(
    entries: &[DatasetEntry],
    pr_opts: &PageRankOptions,
) -> Result<Vec<StructuralSignature>> {
    entries
        .par_iter()
        .map(|e| structural_signature(&e.graph, pr_opts))
        .collect()
}

/// One `(class, metric)` row of the radar comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarRow {
    pub label: Label,
    pub metric: &'static str,
    pub mean: f64,
    pub stddev: f64,
    /// Class mean min-max normalized jointly over the two classes; `0.5` when equal.
    pub normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub stddev: f64,
}

/// Mean and sample standard deviation (`0` for a single value).
pub fn summarize(values: &[f64]) -> SummaryStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stddev = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    SummaryStats { mean, stddev }
}

/// Splits dataset indices by label, failing when any entry is unlabeled.
pub fn indices_by_label(entries: &[DatasetEntry]) -> Result<(Vec<usize>, Vec<usize>)> {
    let missing: Vec<String> = entries
        .iter()
        .filter(|e| e.graph.label.is_none())
        .map(|e| e.path.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingLabels(missing));
    }
    let (mut correct, mut wrong) = (Vec::new(), Vec::new());
    for (i, e) in entries.iter().enumerate() {
        match e.graph.label {
            Some(Label::Correct) => correct.push(i),
            _ => wrong.push(i),
        }
    }
    if correct.is_empty() || wrong.is_empty() {
        return Err(Error::SingleClass {
            correct: correct.len(),
            wrong: wrong.len(),
        });
    }
    Ok((correct, wrong))
}

/// Per-class mean/stddev of each metric plus the jointly normalized class means.
///
/// Rows are ordered metric-major, correct class first.
pub fn class_signature_report(
    entries: &[DatasetEntry],
    pr_opts: &PageRankOptions,
) -> Result<Vec<RadarRow>> {
    let (correct, wrong) = indices_by_label(entries)?;
    let sigs = dataset_signatures(entries, pr_opts)?;
    let column = |idx: &[usize], m: usize| -> Vec<f64> { idx.iter().map(|&i| sigs[i].to_array()[m]).collect() };

    let mut rows = Vec::with_capacity(12);
    for (m, &metric) in StructuralSignature::NAMES.iter().enumerate() {
        let c = summarize(&column(&correct, m));
        let w = summarize(&column(&wrong, m));
        let (lo, hi) = (c.mean.min(w.mean), c.mean.max(w.mean));
        let norm = |x: f64| if hi > lo { (x - lo) / (hi - lo) } else { 0.5 };
        for (label, s) in [(Label::Correct, c), (Label::Wrong, w)] {
            rows.push(RadarRow {
                label,
                metric,
                mean: s.mean,
                stddev: s.stddev,
                normalized: norm(s.mean),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Region;
    use std::path::PathBuf;

    fn chain3() -> AttributionGraph {
        let mut g = AttributionGraph::new(3);
        for l in 0..3 {
            g.add_node(0, l, Region::Question);
        }
        g.add_edge(0, 1, 1.0);
        g.add_edge(1, 2, 1.0);
        g
    }

    fn entry(name: &str, g: AttributionGraph) -> DatasetEntry {
        DatasetEntry {
            path: PathBuf::from(name),
            graph: g,
        }
    }

    #[test]
    fn chain_signature() {
        let g = chain3();
        let sig = structural_signature(&g, &Default::default()).unwrap();
        let pr = pagerank(&g, &Default::default()).unwrap();
        assert_eq!(sig.dag_l, 2);
        assert!((sig.avg_deg - 4.0 / 3.0).abs() < 1e-15);
        assert!((sig.density - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!((sig.t_disc, sig.t_branch), (0.0, 0.0));
        assert_eq!(sig.max_pr, pr.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn edgeless_signature() {
        let mut g = AttributionGraph::new(1);
        for i in 0..5 {
            g.add_node(i, 0, Region::Context);
        }
        let sig = structural_signature(&g, &Default::default()).unwrap();
        assert_eq!(sig.dag_l, 0);
        assert_eq!((sig.avg_deg, sig.density, sig.t_disc, sig.t_branch), (0.0, 0.0, 1.0, 0.0));
        assert!((sig.max_pr - 0.2).abs() < 1e-12);
    }

    #[test]
    fn two_point_normalization() {
        let mut sparse = AttributionGraph::new(3);
        for l in 0..3 {
            sparse.add_node(0, l, Region::Question);
        }
        let mut converging = AttributionGraph::new(2);
        converging.add_node(0, 0, Region::Question);
        converging.add_node(1, 0, Region::Question);
        converging.add_node(2, 1, Region::AnswerInternal);
        converging.add_edge(0, 2, 1.0);
        converging.add_edge(1, 2, 1.0);
        let entries = vec![
            entry("a", converging.with_label(Label::Correct)),
            entry("b", sparse.with_label(Label::Wrong)),
        ];
        let rows = class_signature_report(&entries, &Default::default()).unwrap();
        assert_eq!(rows.len(), 12);
        for pair in rows.chunks(2) {
            let mut v = [pair[0].normalized, pair[1].normalized];
            v.sort_by(f64::total_cmp);
            assert_eq!(v, [0.0, 1.0], "{}", pair[0].metric);
        }
        let dag = &rows[0];
        assert_eq!((dag.label, dag.metric, dag.normalized), (Label::Correct, "dag_l", 1.0));
    }

    #[test]
    fn identical_classes_normalize_to_half() {
        let entries = vec![
            entry("a", chain3().with_label(Label::Correct)),
            entry("b", chain3().with_label(Label::Wrong)),
        ];
        let rows = class_signature_report(&entries, &Default::default()).unwrap();
        assert!(rows.iter().all(|r| r.normalized == 0.5 && r.stddev == 0.0));
    }

    #[test]
    fn missing_labels_are_listed() {
        let entries = vec![entry("x.graph.json", chain3()), entry("y", chain3().with_label(Label::Wrong))];
        let err = class_signature_report(&entries, &Default::default()).unwrap_err();
        assert!(err.to_string().contains("x.graph.json"));
    }

    #[test]
    fn summary_stats() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stddev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(summarize(&[7.0]).stddev, 0.0);
    }
}
