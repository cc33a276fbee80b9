// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::error::{Error, Result};
use crate::graph::AttributionGraph;

/// Length, in edges, of the longest directed path. `0` for edgeless graphs.
pub fn dag_longest_path(graph: &AttributionGraph) -> Result<usize> {
    let adj = graph.adjacency();
    let order = adj.topological_order().ok_or(Error::NotDag)?;
    let mut depth = vec![0usize; graph.node_count()];
    let mut best = 0;
    for v in order {
        let d = depth[v];
        best = best.max(d);
        for &w in adj.successors(v) {
            depth[w] = depth[w].max(d + 1);
        }
    }
    Ok(best)
}

/// Average total degree `2|E|/|V|` and directed density `|E|/(|V|(|V|-1))`.
///
/// Density is `0` for graphs with fewer than two nodes; both are `0` for the empty graph.
pub fn degree_stats(graph: &AttributionGraph) -> (f64, f64) {
    let n = graph.node_count();
    let m = graph.edge_count() as f64;
    if n == 0 {
        return (0.0, 0.0);
    }
    let avg_deg = 2.0 * m / n as f64;
    let density = if n < 2 {
        0.0
    } else {
        m / (n as f64 * (n as f64 - 1.0))
    };
    (avg_deg, density)
}
