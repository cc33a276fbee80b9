// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use attrgraph_core::synth::{generate, GenConfig};
use attrgraph_core::{AttributionGraph, Label, Region};
use attrgraph_detector::{build_features, Example};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn synthetic(label: Label, index: usize) -> AttributionGraph {
    let mut cfg = GenConfig::standard();
    cfg.seed = 1000 + index as u64;
    generate(label, &cfg).unwrap()
}

/// Random layered DAG with every region represented.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> AttributionGraph {
    let layers = 4;
    let mut g = AttributionGraph::new(layers);
    for i in 0..n {
        let region = Region::ALL[rng.gen_range(0..5)];
        g.add_node(i, rng.gen_range(0..layers), region);
    }
    for u in 0..n {
        for v in 0..n {
            let (a, b) = (&g.nodes[u], &g.nodes[v]);
            let forward = a.layer < b.layer || (a.layer == b.layer && a.token_pos < b.token_pos);
            if forward && rng.gen::<f64>() < p {
                let w = rng.gen_range(-2.0..2.0);
                g.add_edge(u, v, w);
            }
        }
    }
    g
}

pub fn example(id: &str, g: &AttributionGraph) -> Example {
    Example {
        id: id.to_string(),
        features: build_features(g).unwrap(),
        label: g.label.unwrap_or(Label::Wrong),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
