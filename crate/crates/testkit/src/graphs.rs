// SPDX-License-Identifier: MIT OR Apache-2.0

use attrgraph_core::{AttributionGraph, Label, Region};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG whose node ids are shuffled relative to the topological order.
///
/// Nodes are placed on a hidden order; layers are non-decreasing along it and
/// token positions strictly increasing, so every forward edge is valid.
pub fn random_dag(r: &mut ChaCha8Rng, n: usize, p: f64, num_layers: usize) -> AttributionGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let mut layers: Vec<usize> = (0..n).map(|_| r.gen_range(0..num_layers)).collect();
    layers.sort_unstable();
    // rank[id] = position of node id in the hidden order
    let mut rank = vec![0; n];
    for (k, &id) in order.iter().enumerate() {
        rank[id] = k;
    }
    let mut g = AttributionGraph::new(num_layers);
    for id in 0..n {
        let region = Region::ALL[r.gen_range(0..Region::ALL.len())];
        g.add_node(rank[id], layers[rank[id]], region);
    }
    for a in 0..n {
        for b in 0..n {
            if rank[a] < rank[b] && r.gen::<f64>() < p {
                let w = r.gen_range(-1.5..1.5);
                g.add_edge(a, b, w);
            }
        }
    }
    if r.gen_bool(0.5) {
        g.label = Some(if r.gen_bool(0.5) { Label::Correct } else { Label::Wrong });
    }
    g
}

/// Random directed graph (cycles and mutual dyads allowed). Not a valid
/// attribution graph; used only for structure-agnostic algorithms.
pub fn random_digraph(r: &mut ChaCha8Rng, n: usize, p: f64) -> AttributionGraph {
    let mut g = AttributionGraph::new(1);
    for i in 0..n {
        g.add_node(i, 0, Region::Question);
    }
    for a in 0..n {
        for b in 0..n {
            if a != b && r.gen::<f64>() < p {
                g.edges.push(attrgraph_core::Edge { src: a, dst: b, weight: 1.0 });
            }
        }
    }
    g
}
