// SPDX-License-Identifier: MIT OR Apache-2.0

//! Property tests over random graphs.

use attrgraph_testkit as common;

use attrgraph_core::io::{graph_to_json, load_graph, parse_graph, save_graph};
use attrgraph_core::metrics::{choose3, dag_longest_path, pagerank, triad_census, PageRankOptions};
use attrgraph_core::routing::{routing_profile, RoutingOptions};
use attrgraph_core::{structural_signature, AttributionGraph, Edge, Region};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use std::path::Path;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = AttributionGraph> {
    (any::<u64>(), 1..=max_n, 0.05f64..0.5, 1usize..12).prop_map(|(seed, n, p, layers)| {
        let mut r = common::rng(seed);
        common::random_dag(&mut r, n, p, layers)
    })
}

fn permutation(seed: u64, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut common::rng(seed));
    perm
}

const TOKENS: [&str; 6] = ["the", " Paris", "é", "東京", "🙂", "a\"b\\c\n"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn save_load_round_trip(g in graph_strategy(40), seed in any::<u64>()) {
        let mut g = g;
        let mut r = common::rng(seed);
        for node in g.nodes.iter_mut() {
            if r.gen_bool(0.5) {
                node.token_text = Some(TOKENS[r.gen_range(0..TOKENS.len())].to_string());
            }
        }
        g.meta.insert("model".into(), "toy-7 ✓".into());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.graph.json");
        save_graph(&g, &path).unwrap();
        let back = load_graph(&path).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(graph_to_json(&back), graph_to_json(&g));
    }

    #[test]
    fn signature_is_relabel_invariant(g in graph_strategy(30), seed in any::<u64>()) {
        let h = g.relabeled(&permutation(seed, g.node_count()));
        let opts = PageRankOptions::default();
        let a = structural_signature(&g, &opts).unwrap();
        let b = structural_signature(&h, &opts).unwrap();
        prop_assert_eq!(a.dag_l, b.dag_l);
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            prop_assert!((x - y).abs() <= 1e-12, "{:?} vs {:?}", a, b);
        }
        prop_assert_eq!(triad_census(&g), triad_census(&h));
    }

    #[test]
    fn pagerank_is_a_distribution_and_equivariant(g in graph_strategy(30), seed in any::<u64>(), weighted in any::<bool>()) {
        let opts = PageRankOptions { weighted, ..Default::default() };
        let pr = pagerank(&g, &opts).unwrap();
        prop_assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pr.iter().all(|&x| x > 0.0));
        let perm = permutation(seed, g.node_count());
        let pr2 = pagerank(&g.relabeled(&perm), &opts).unwrap();
        for (old, &new) in perm.iter().enumerate() {
            prop_assert!((pr[old] - pr2[new]).abs() < 1e-9);
        }
    }

    #[test]
    fn census_total_and_depth_bounds(g in graph_strategy(40)) {
        let n = g.node_count();
        prop_assert_eq!(triad_census(&g).total(), choose3(n));
        prop_assert!(dag_longest_path(&g).unwrap() < n.max(1));
        let sig = structural_signature(&g, &Default::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&sig.density));
        prop_assert!((0.0..=1.0).contains(&sig.t_disc) && (0.0..=1.0).contains(&sig.t_branch));
    }

    #[test]
    fn routing_is_linear_in_weights(g in graph_strategy(30), c in -4.0f64..4.0) {
        let opts = RoutingOptions { magnitude: false, normalize: false, ..Default::default() };
        let base = routing_profile(&g, &opts);
        let mut scaled = g.clone();
        scaled.edges.iter_mut().for_each(|e| e.weight *= c);
        let p = routing_profile(&scaled, &opts);
        for (a, b) in base.cells.iter().flatten().flatten().zip(p.cells.iter().flatten().flatten()) {
            prop_assert!((a * c - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        for (a, b) in base.residual.iter().zip(&p.residual) {
            prop_assert!((a * c - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn routing_is_additive_over_edge_sets(g in graph_strategy(30), seed in any::<u64>()) {
        let opts = RoutingOptions { magnitude: false, normalize: false, ..Default::default() };
        let mut r = common::rng(seed);
        let (mut left, mut right) = (g.clone(), g.clone());
        left.edges.clear();
        right.edges.clear();
        for e in &g.edges {
            if r.gen_bool(0.5) { left.edges.push(*e) } else { right.edges.push(*e) }
        }
        let (all, a, b) = (routing_profile(&g, &opts), routing_profile(&left, &opts), routing_profile(&right, &opts));
        for ((x, y), z) in all.cells.iter().flatten().flatten()
            .zip(a.cells.iter().flatten().flatten())
            .zip(b.cells.iter().flatten().flatten())
        {
            prop_assert!((x - y - z).abs() <= 1e-12);
        }
    }

    #[test]
    fn valid_graphs_admit_a_topological_order(seed in any::<u64>(), n in 1usize..25, extra in 0usize..6) {
        // arbitrary edges, possibly backward; validation must agree with acyclicity
        let mut r = common::rng(seed);
        let mut g = AttributionGraph::new(4);
        for i in 0..n {
            g.add_node(i, r.gen_range(0..4), Region::Context);
        }
        for _ in 0..(n + extra) {
            let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
            if a != b && !g.edges.iter().any(|e| e.src == a && e.dst == b) {
                g.edges.push(Edge { src: a, dst: b, weight: 0.5 });
            }
        }
        if g.validate().is_valid() {
            let order = g.topological_order().expect("valid graph is acyclic");
            let mut rank = vec![0; n];
            for (k, &v) in order.iter().enumerate() { rank[v] = k; }
            prop_assert!(g.edges.iter().all(|e| rank[e.src] < rank[e.dst]));
        }
    }
}

#[test]
fn parse_sorts_nodes_and_sums_parallel_edges() {
    let text = r#"{"num_layers":2,"nodes":[
        {"id":1,"token_pos":1,"layer":1,"region":"Q"},
        {"id":0,"token_pos":0,"layer":0,"region":"CTX"}],
      "edges":[{"src":0,"dst":1,"weight":0.25},{"src":0,"dst":1,"weight":0.5}]}"#;
    let g = parse_graph(text, Path::new("inline")).unwrap();
    assert_eq!(g.nodes[0].id, 0);
    assert_eq!(g.edges.len(), 1);
    assert_eq!(g.edges[0].weight, 0.75);
    assert!(g.validate().is_valid());
}
