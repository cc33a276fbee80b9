// SPDX-License-Identifier: MIT OR Apache-2.0

//! Brute-force reference implementations.

use std::collections::{BTreeMap, HashSet};

use attrgraph_core::metrics::{PageRankOptions, TriadType};
use attrgraph_core::routing::{LayerAttach, RoutingOptions};
use attrgraph_core::{AttributionGraph, Region};

/// Classifies a triple from its dyad types (mutual, asymmetric, null) and the
/// direction of its asymmetric edges.
pub fn classify_triad(has: &dyn Fn(usize, usize) -> bool, t: [usize; 3]) -> &'static str {
    let pairs = [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])];
    let mut mutual = Vec::new();
    let mut asym = Vec::new();
    for (a, b) in pairs {
        match (has(a, b), has(b, a)) {
            (true, true) => mutual.push((a, b)),
            (true, false) => asym.push((a, b)),
            (false, true) => asym.push((b, a)),
            (false, false) => {}
        }
    }
    let out_deg = |v: usize| asym.iter().filter(|e| e.0 == v).count();
    let in_deg = |v: usize| asym.iter().filter(|e| e.1 == v).count();
    match (mutual.len(), asym.len()) {
        (0, 0) => "003",
        (0, 1) => "012",
        (1, 0) => "102",
        (0, 2) => {
            if asym[0].0 == asym[1].0 {
                "021D"
            } else if asym[0].1 == asym[1].1 {
                "021U"
            } else {
                "021C"
            }
        }
        (1, 1) => {
            // the asymmetric edge either enters or leaves the mutual pair
            let (m, e) = (mutual[0], asym[0]);
            if e.1 == m.0 || e.1 == m.1 {
                "111D"
            } else {
                "111U"
            }
        }
        (0, 3) => {
            if t.iter().all(|&v| out_deg(v) == 1 && in_deg(v) == 1) {
                "030C"
            } else {
                "030T"
            }
        }
        (2, 0) => "201",
        (1, 2) => {
            let m = mutual[0];
            let third = *t.iter().find(|&&v| v != m.0 && v != m.1).expect("three distinct nodes");
            match out_deg(third) {
                2 => "120D",
                0 => "120U",
                _ => "120C",
            }
        }
        (2, 1) => "210",
        (3, 0) => "300",
        _ => unreachable!("a triple has three dyads"),
    }
}

/// Full census over all triples, as `(class name, count)` in canonical class order.
pub fn triad_census(g: &AttributionGraph) -> Vec<(String, u64)> {
    let edges: HashSet<(usize, usize)> = g.edges.iter().map(|e| (e.src, e.dst)).collect();
    let has = |a: usize, b: usize| edges.contains(&(a, b));
    let n = g.node_count();
    let mut counts = BTreeMap::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                *counts.entry(classify_triad(&has, [a, b, c])).or_insert(0u64) += 1;
            }
        }
    }
    TriadType::ALL
        .iter()
        .map(|t| (t.name().to_string(), counts.get(t.name()).copied().unwrap_or(0)))
        .collect()
}

/// Longest path in edges by enumerating every path.
pub fn longest_path(g: &AttributionGraph) -> usize {
    fn walk(g: &AttributionGraph, v: usize, len: usize, best: &mut usize) {
        *best = (*best).max(len);
        for e in g.edges.iter().filter(|e| e.src == v) {
            walk(g, e.dst, len + 1, best);
        }
    }
    let mut best = 0;
    for v in 0..g.node_count() {
        walk(g, v, 0, &mut best);
    }
    best
}

/// Whether some ordering of all nodes is a directed path.
pub fn has_hamiltonian_path(g: &AttributionGraph) -> bool {
    fn extend(edges: &HashSet<(usize, usize)>, n: usize, path: &mut Vec<usize>, used: &mut [bool]) -> bool {
        if path.len() == n {
            return true;
        }
        for v in 0..n {
            if !used[v] && path.last().map_or(true, |&u| edges.contains(&(u, v))) {
                used[v] = true;
                path.push(v);
                if extend(edges, n, path, used) {
                    return true;
                }
                path.pop();
                used[v] = false;
            }
        }
        false
    }
    let n = g.node_count();
    let edges: HashSet<(usize, usize)> = g.edges.iter().map(|e| (e.src, e.dst)).collect();
    n > 0 && extend(&edges, n, &mut Vec::new(), &mut vec![false; n])
}

/// Dense Google-matrix power iteration run to a much tighter tolerance.
pub fn pagerank(g: &AttributionGraph, opts: &PageRankOptions) -> Vec<f64> {
    let n = g.node_count();
    let mut w = vec![vec![0.0f64; n]; n];
    for e in &g.edges {
        let (s, d) = if opts.reversed { (e.dst, e.src) } else { (e.src, e.dst) };
        w[s][d] += if opts.weighted { e.weight.abs() } else { 1.0 };
    }
    // m[i][j]: probability of stepping from j to i
    let mut m = vec![vec![0.0f64; n]; n];
    for j in 0..n {
        let out: f64 = w[j].iter().sum();
        for i in 0..n {
            let follow = if out > 0.0 { w[j][i] / out } else { 1.0 / n as f64 };
            m[i][j] = opts.damping * follow + (1.0 - opts.damping) / n as f64;
        }
    }
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..5000 {
        let y: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[i][j] * x[j]).sum()).collect();
        let delta: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

/// Per-layer 3x3 cells and residual by scanning the edge list once per cell.
///
/// Each cell adds its matching edges in edge-list order, so the floating-point
/// summation order equals a single in-order pass.
pub fn routing(g: &AttributionGraph, opts: &RoutingOptions) -> (Vec<[[f64; 3]; 3]>, Vec<f64>) {
    let slot = |r: Region| match r {
        Region::Question => Some(0),
        Region::AnswerExternal => Some(1),
        Region::AnswerInternal => Some(2),
        Region::Context | Region::Intermediate => None,
    };
    let layer_of = |src: usize, dst: usize| {
        if opts.attach == LayerAttach::Dst {
            g.nodes[dst].layer
        } else {
            g.nodes[src].layer
        }
    };
    let mass = |w: f64| if opts.magnitude { w.abs() } else { w };
    let mut cells = vec![[[0.0f64; 3]; 3]; g.num_layers];
    let mut residual = vec![0.0f64; g.num_layers];
    for layer in 0..g.num_layers {
        for x in 0..3 {
            for y in 0..3 {
                for e in &g.edges {
                    let (s, d) = (slot(g.nodes[e.src].region), slot(g.nodes[e.dst].region));
                    if layer_of(e.src, e.dst) == layer && s == Some(x) && d == Some(y) {
                        cells[layer][x][y] += mass(e.weight);
                    }
                }
            }
        }
        for e in &g.edges {
            let routed = slot(g.nodes[e.src].region).is_some() && slot(g.nodes[e.dst].region).is_some();
            if layer_of(e.src, e.dst) == layer && !routed {
                residual[layer] += mass(e.weight);
            }
        }
        if opts.normalize {
            let total: f64 = cells[layer].iter().flatten().sum();
            if total != 0.0 {
                for c in cells[layer].iter_mut().flatten() {
                    *c /= total;
                }
            }
        }
    }
    (cells, residual)
}
