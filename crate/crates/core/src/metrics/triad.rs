// SPDX-License-Identifier: MIT OR Apache-2.0

//! Directed triad census.
//!
//! Every unordered node triple falls into exactly one of the 16 isomorphism
//! classes of directed graphs on three nodes (MAN naming: counts of Mutual,
//! Asymmetric and Null dyads, plus a shape suffix). Small graphs use a dense
//! scan over all triples; large graphs use the neighborhood-based algorithm of
//! Batagelj and Mrvar, which only visits connected triples and derives the
//! empty-triad count from the total.

use std::fmt;

use crate::graph::{AttributionGraph, Edge};

/// Above this node count [`triad_census`] switches to the sparse algorithm.
pub const DENSE_CENSUS_MAX_NODES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TriadType {
    T003,
    T012,
    T102,
    T021D,
    T021U,
    T021C,
    T111D,
    T111U,
    T030T,
    T030C,
    T201,
    T120D,
    T120U,
    T120C,
    T210,
    T300,
}

impl TriadType {
    pub const ALL: [TriadType; 16] = [
        TriadType::T003,
        TriadType::T012,
        TriadType::T102,
        TriadType::T021D,
        TriadType::T021U,
        TriadType::T021C,
        TriadType::T111D,
        TriadType::T111U,
        TriadType::T030T,
        TriadType::T030C,
        TriadType::T201,
        TriadType::T120D,
        TriadType::T120U,
        TriadType::T120C,
        TriadType::T210,
        TriadType::T300,
    ];

    pub fn name(self) -> &'static str {
        const NAMES: [&str; 16] = [
            "003", "012", "102", "021D", "021U", "021C", "111D", "111U", "030T", "030C", "201",
            "120D", "120U", "120C", "210", "300",
        ];
        NAMES[self as usize]
    }
}

impl fmt::Display for TriadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps a 6-bit triad code to its class index (see [`tricode`] for the bit layout).
const TRICODE_CLASS: [u8; 64] = [
    0, 1, 1, 2, 1, 3, 5, 7, 1, 5, 4, 6, 2, 7, 6, 10, 1, 5, 3, 7, 4, 8, 8, 12, 5, 9, 8, 13, 6, 13,
    11, 14, 1, 4, 5, 6, 5, 8, 9, 13, 3, 8, 8, 11, 7, 12, 13, 14, 2, 6, 7, 10, 6, 11, 13, 14, 7, 13,
    12, 14, 10, 14, 14, 15,
];

/// Counts per triad class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TriadCensus {
    counts: [u64; 16],
}

impl TriadCensus {
    pub fn get(&self, t: TriadType) -> u64 {
        self.counts[t as usize]
    }

    pub fn counts(&self) -> &[u64; 16] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Share of empty triads among all triads.
    pub fn disconnected_fraction(&self) -> f64 {
        self.fraction(TriadType::T003)
    }

    /// Share of triads with exactly two edges converging on one node.
    pub fn branch_fraction(&self) -> f64 {
        self.fraction(TriadType::T021U)
    }

    fn fraction(&self, t: TriadType) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.get(t) as f64 / total as f64
        }
    }
}

/// Number of 3-subsets of an `n`-set.
pub fn choose3(n: usize) -> u64 {
    let n = n as u64;
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// Sorted out-neighbor lists, used for `O(log d)` edge lookups.
struct EdgeLookup {
    out: Vec<Vec<usize>>,
}

impl EdgeLookup {
    fn new(n: usize, edges: &[Edge]) -> Self {
        let mut out = vec![Vec::new(); n];
        for e in edges {
            if e.src != e.dst {
                out[e.src].push(e.dst);
            }
        }
        for list in &mut out {
            list.sort_unstable();
            list.dedup();
        }
        EdgeLookup { out }
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.out[a].binary_search(&b).is_ok()
    }
}

/// Bit layout: `v->u`, `u->v`, `v->w`, `w->v`, `u->w`, `w->u` from bit 0 upward.
fn tricode(has: impl Fn(usize, usize) -> bool, v: usize, u: usize, w: usize) -> usize {
    let pairs = [(v, u), (u, v), (v, w), (w, v), (u, w), (w, u)];
    pairs
        .iter()
        .enumerate()
        .filter(|(_, &(a, b))| has(a, b))
        .fold(0, |code, (bit, _)| code | (1 << bit))
}

/// Census by scanning every triple, `O(|V|^3)`.
pub fn triad_census_dense(graph: &AttributionGraph) -> TriadCensus {
    let n = graph.node_count();
    let mut adj = vec![false; n * n];
    for e in &graph.edges {
        if e.src != e.dst {
            adj[e.src * n + e.dst] = true;
        }
    }
    let has = |a: usize, b: usize| adj[a * n + b];
    let mut census = TriadCensus::default();
    for v in 0..n {
        for u in v + 1..n {
            for w in u + 1..n {
                census.counts[TRICODE_CLASS[tricode(has, v, u, w)] as usize] += 1;
            }
        }
    }
    census
}

/// Census visiting only triples that contain at least one edge.
pub fn triad_census_sparse(graph: &AttributionGraph) -> TriadCensus {
    let n = graph.node_count();
    let lookup = EdgeLookup::new(n, &graph.edges);
    let has = |a: usize, b: usize| lookup.has_edge(a, b);

    let mut undirected: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &graph.edges {
        if e.src != e.dst {
            undirected[e.src].push(e.dst);
            undirected[e.dst].push(e.src);
        }
    }
    for list in &mut undirected {
        list.sort_unstable();
        list.dedup();
    }

    let mut census = TriadCensus::default();
    // `mark[w] == stamp` means w is in N(u) ∪ N(v) for the current dyad.
    let mut mark = vec![usize::MAX; n];
    let mut stamp = 0usize;
    for v in 0..n {
        for &u in undirected[v].iter().filter(|&&u| u > v) {
            stamp += 1;
            mark[u] = stamp;
            mark[v] = stamp;
            let mut union_size = 0u64;
            for &w in undirected[u].iter().chain(undirected[v].iter()) {
                if mark[w] == stamp {
                    continue;
                }
                mark[w] = stamp;
                union_size += 1;
                let v_adjacent = undirected[v].binary_search(&w).is_ok();
                if u < w || (v < w && w < u && !v_adjacent) {
                    census.counts[TRICODE_CLASS[tricode(has, v, u, w)] as usize] += 1;
                }
            }
            let dyad = if has(v, u) && has(u, v) {
                TriadType::T102
            } else {
                TriadType::T012
            };
            census.counts[dyad as usize] += n as u64 - union_size - 2;
        }
    }
    let connected: u64 = census.counts[1..].iter().sum();
    census.counts[TriadType::T003 as usize] = choose3(n) - connected;
    census
}

/// Full 16-class census, picking the algorithm by graph size.
pub fn triad_census(graph: &AttributionGraph) -> TriadCensus {
    if graph.node_count() <= DENSE_CENSUS_MAX_NODES {
        triad_census_dense(graph)
    } else {
        triad_census_sparse(graph)
    }
}

/// `(T_disc, T_branch)`, both `0` when the graph has fewer than three nodes.
pub fn triad_fractions(graph: &AttributionGraph) -> (f64, f64) {
    if graph.node_count() < 3 {
        return (0.0, 0.0);
    }
    let census = triad_census(graph);
    (census.disconnected_fraction(), census.branch_fraction())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Region;

    fn graph(n: usize, edges: &[(usize, usize)]) -> AttributionGraph {
        let mut g = AttributionGraph::new(1);
        for i in 0..n {
            g.add_node(i, 0, Region::Intermediate);
        }
        for &(s, d) in edges {
            g.add_edge(s, d, 1.0);
        }
        g
    }

    #[test]
    fn three_isolated_nodes() {
        let c = triad_census(&graph(3, &[]));
        assert_eq!(c.get(TriadType::T003), 1);
        assert_eq!(c.total(), 1);
        assert_eq!(c.disconnected_fraction(), 1.0);
    }

    #[test]
    fn converging_pair_is_branch() {
        let g = graph(3, &[(0, 2), (1, 2)]);
        for c in [triad_census_dense(&g), triad_census_sparse(&g)] {
            assert_eq!(c.get(TriadType::T021U), 1);
            assert_eq!(c.branch_fraction(), 1.0);
        }
    }

    #[test]
    fn diverging_pair_is_not_branch() {
        let c = triad_census(&graph(3, &[(2, 0), (2, 1)]));
        assert_eq!(c.get(TriadType::T021D), 1);
        assert_eq!(c.branch_fraction(), 0.0);
    }

    #[test]
    fn small_graphs_have_zero_fractions() {
        assert_eq!(triad_fractions(&graph(2, &[(0, 1)])), (0.0, 0.0));
        assert_eq!(triad_census(&graph(2, &[(0, 1)])).total(), 0);
    }

    #[test]
    fn totals_match_choose3() {
        let g = graph(7, &[(0, 1), (1, 2), (3, 4), (4, 0), (5, 6), (6, 5)]);
        assert_eq!(triad_census_dense(&g).total(), choose3(7));
        assert_eq!(triad_census_sparse(&g), triad_census_dense(&g));
    }

    #[test]
    fn sparse_path_taken_for_large_graphs() {
        let n = DENSE_CENSUS_MAX_NODES + 20;
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        let g = graph(n, &edges);
        let c = triad_census(&g);
        assert_eq!(c.total(), choose3(n));
        // A path has n-2 two-edge chains and (n-1)(n-2) - 2(n-2) single-edge triads.
        assert_eq!(c.get(TriadType::T021C), (n - 2) as u64);
        assert_eq!(c.get(TriadType::T012), ((n - 1) * (n - 2) - 2 * (n - 2)) as u64);
    }
}
