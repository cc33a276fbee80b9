// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-graph detector inputs.

use attrgraph_core::metrics::{pagerank, structural_signature, PageRankOptions, StructuralSignature};
use attrgraph_core::{AttributionGraph, Region};
use ndarray::Array2;

use crate::error::{DetectorError, Result};

/// Width of the node feature vector: five region indicators plus four structural signals.
pub const NODE_FEATURE_DIM: usize = 9;
/// Width of the topology signature.
pub const TOPOLOGY_DIM: usize = 6;

/// Everything the model reads from one graph.
///
/// Dense `n x n` matrices are indexed `[dst][src]`, so row `v` lists the
/// in-neighbors of node `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFeatures {
    /// `n x 9` node features.
    pub nodes: Array2<f64>,
    /// `tanh(weight)` for each edge, aligned with the graph's edge list.
    pub edge_values: Vec<f64>,
    /// `tanh(weight)` placed at `[dst][src]`, zero elsewhere.
    pub edge_matrix: Array2<f64>,
    /// One at `[dst][src]` for every edge.
    pub adjacency: Array2<f64>,
    /// Adjacency with each row divided by the in-degree of its node.
    pub in_mean: Array2<f64>,
    /// Raw (unstandardized) six-metric signature.
    pub topology: [f64; TOPOLOGY_DIM],
}

impl GraphFeatures {
    pub fn node_count(&self) -> usize {
        self.nodes.nrows()
    }
}

fn max_normalize(values: &mut [f64]) {
    let max = values.iter().cloned().fold(0.0, f64::max);
    for v in values.iter_mut() {
        *v = if max > 0.0 { *v / max } else { 0.0 };
    }
}

/// Builds node, edge and topology features for a validated graph.
pub fn build_features(graph: &AttributionGraph) -> Result<GraphFeatures> {
    let n = graph.node_count();
    if n == 0 {
        return Err(DetectorError::EmptyGraph);
    }
    let pr_opts = PageRankOptions::default();
    let adj = graph.adjacency();
    let mut indeg: Vec<f64> = (0..n).map(|v| adj.in_degree(v) as f64).collect();
    let mut outdeg: Vec<f64> = (0..n).map(|v| adj.out_degree(v) as f64).collect();
    let mut total: Vec<f64> = indeg.iter().zip(&outdeg).map(|(a, b)| a + b).collect();
    let mut pr = pagerank(graph, &pr_opts)?;
    let in_counts = indeg.clone();
    for signal in [&mut indeg, &mut outdeg, &mut total, &mut pr] {
        max_normalize(signal);
    }

    let mut nodes = Array2::zeros((n, NODE_FEATURE_DIM));
    for (v, node) in graph.nodes.iter().enumerate() {
        nodes[[v, node.region.index()]] = 1.0;
        nodes[[v, Region::ALL.len()]] = indeg[v];
        nodes[[v, Region::ALL.len() + 1]] = outdeg[v];
        nodes[[v, Region::ALL.len() + 2]] = total[v];
        nodes[[v, Region::ALL.len() + 3]] = pr[v];
    }

    let mut edge_values = Vec::with_capacity(graph.edge_count());
    let mut edge_matrix = Array2::zeros((n, n));
    let mut adjacency = Array2::zeros((n, n));
    for e in &graph.edges {
        let t = e.weight.tanh();
        edge_values.push(t);
        edge_matrix[[e.dst, e.src]] = t;
        adjacency[[e.dst, e.src]] = 1.0;
    }
    let mut in_mean = adjacency.clone();
    for (mut row, &d) in in_mean.rows_mut().into_iter().zip(&in_counts) {
        if d > 0.0 {
            row.mapv_inplace(|x| x / d);
        }
    }

    let topology = structural_signature(graph, &pr_opts)?.to_array();
    Ok(GraphFeatures {
        nodes,
        edge_values,
        edge_matrix,
        adjacency,
        in_mean,
        topology,
    })
}

/// Names of the topology signature entries, in order.
pub fn topology_names() -> [&'static str; TOPOLOGY_DIM] {
    StructuralSignature::NAMES
}

/// Column-wise mean and sample standard deviation of raw signatures.
///
/// A zero (or single-sample) deviation is replaced by one so standardization
/// leaves that coordinate centered but unscaled.
pub fn fit_standardizer(signatures: &[[f64; TOPOLOGY_DIM]]) -> ([f64; TOPOLOGY_DIM], [f64; TOPOLOGY_DIM]) {
    let n = signatures.len() as f64;
    let mut mean = [0.0; TOPOLOGY_DIM];
    let mut std = [1.0; TOPOLOGY_DIM];
    if signatures.is_empty() {
        return ([0.0; TOPOLOGY_DIM], std);
    }
    for k in 0..TOPOLOGY_DIM {
        mean[k] = signatures.iter().map(|s| s[k]).sum::<f64>() / n;
        if signatures.len() > 1 {
            let var = signatures.iter().map(|s| (s[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0);
            if var > 0.0 {
                std[k] = var.sqrt();
            }
        }
    }
    (mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_question_node() {
        let mut g = AttributionGraph::new(1);
        g.add_node(0, 0, Region::Question);
        let f = build_features(&g).unwrap();
        assert_eq!(f.nodes.row(0).to_vec(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(f.edge_values.is_empty());
    }

    #[test]
    fn edge_transform() {
        let mut g = AttributionGraph::new(2);
        let a = g.add_node(0, 0, Region::Question);
        let b = g.add_node(0, 1, Region::AnswerInternal);
        let c = g.add_node(1, 1, Region::Context);
        g.add_edge(a, b, 0.0);
        g.add_edge(a, c, 10.0);
        let f = build_features(&g).unwrap();
        assert_eq!(f.edge_values[0], 0.0);
        assert!((f.edge_values[1] - 0.999_999_995_877_692_8).abs() < 1e-6);
        assert_eq!(f.edge_matrix[[c, a]], f.edge_values[1]);
        assert_eq!(f.in_mean[[b, a]], 1.0);
    }

    #[test]
    fn structural_block_is_max_normalized() {
        let mut g = AttributionGraph::new(2);
        let hub = g.add_node(0, 1, Region::AnswerExternal);
        for i in 0..3 {
            let s = g.add_node(i, 0, Region::Context);
            g.add_edge(s, hub, 1.0);
        }
        let f = build_features(&g).unwrap();
        for v in 0..f.node_count() {
            let row = f.nodes.row(v);
            assert_eq!(row.iter().take(5).sum::<f64>(), 1.0);
            assert!(row.iter().skip(5).all(|x| (0.0..=1.0).contains(x)));
        }
        assert_eq!(f.nodes[[hub, 5]], 1.0);
        assert_eq!(f.nodes[[hub, 6]], 0.0);
        assert_eq!(f.nodes[[hub, 8]], 1.0);
        assert_eq!(f.in_mean.row(hub).sum(), 1.0);
    }

    #[test]
    fn empty_graph_is_rejected() {
        assert!(matches!(build_features(&AttributionGraph::new(1)), Err(DetectorError::EmptyGraph)));
    }

    #[test]
    fn standardizer_handles_constant_columns() {
        let (m, s) = fit_standardizer(&[[1.0, 2.0, 0.0, 0.0, 0.0, 0.0], [3.0, 2.0, 0.0, 0.0, 0.0, 0.0]]);
        assert_eq!(m[0], 2.0);
        assert!((s[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((m[1], s[1]), (2.0, 1.0));
    }
}
