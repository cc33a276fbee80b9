// SPDX-License-Identifier: MIT OR Apache-2.0

//! Metric and routing implementations against independent brute-force oracles.

use attrgraph_testkit as common;
use attrgraph_testkit::oracles;

use std::collections::HashSet;

use attrgraph_core::metrics::{
    choose3, dag_longest_path, pagerank, triad_census, triad_census_dense, triad_census_sparse, PageRankOptions,
    TriadType,
};
use attrgraph_core::routing::{routing_profile, LayerAttach, RouteRegion, RoutingOptions};

fn census_pairs(c: &attrgraph_core::metrics::TriadCensus) -> Vec<(String, u64)> {
    TriadType::ALL.iter().map(|&t| (t.name().to_string(), c.get(t))).collect()
}

#[test]
fn triad_census_matches_exhaustive_classifier_on_dags() {
    let mut r = common::rng(101);
    for i in 0..200 {
        let n = 3 + i % 28;
        let p = if i % 2 == 0 { 0.1 } else { 0.3 };
        let g = common::random_dag(&mut r, n, p, 6);
        let expected = oracles::triad_census(&g);
        assert_eq!(census_pairs(&triad_census(&g)), expected, "graph {i}");
        assert_eq!(census_pairs(&triad_census_sparse(&g)), expected, "sparse, graph {i}");
    }
}

#[test]
fn triad_census_matches_exhaustive_classifier_on_general_digraphs() {
    let mut r = common::rng(202);
    let mut seen = HashSet::new();
    for i in 0..150 {
        let n = 3 + i % 20;
        let p = [0.15, 0.35, 0.6][i % 3];
        let g = common::random_digraph(&mut r, n, p);
        let expected = oracles::triad_census(&g);
        for (name, c) in &expected {
            if *c > 0 {
                seen.insert(name.clone());
            }
        }
        assert_eq!(census_pairs(&triad_census_dense(&g)), expected, "dense, graph {i}");
        assert_eq!(census_pairs(&triad_census_sparse(&g)), expected, "sparse, graph {i}");
    }
    assert_eq!(seen.len(), 16, "every class exercised: {seen:?}");
}

#[test]
fn sparse_and_dense_agree_around_the_switch() {
    let mut r = common::rng(303);
    for n in [395, 401, 430] {
        let g = common::random_dag(&mut r, n, 4.0 / n as f64, 32);
        let dense = triad_census_dense(&g);
        assert_eq!(dense, triad_census_sparse(&g), "n = {n}");
        assert_eq!(dense.total(), choose3(n));
    }
}


#[test]
fn longest_path_matches_enumeration() {
    let mut r = common::rng(404);
    for i in 0..200 {
        let n = 1 + i % 12;
        let p = [0.1, 0.3, 0.6][i % 3];
        let g = common::random_dag(&mut r, n, p, 4);
        assert_eq!(dag_longest_path(&g).unwrap(), oracles::longest_path(&g), "graph {i}");
    }
}

#[test]
fn hamiltonian_path_iff_maximal_depth() {
    let mut r = common::rng(505);
    for i in 0..80 {
        let n = 2 + i % 8;
        let g = common::random_dag(&mut r, n, 0.5, 3);
        let depth = dag_longest_path(&g).unwrap();
        assert!(depth < n);
        assert_eq!(depth == n - 1, oracles::has_hamiltonian_path(&g), "graph {i}");
    }
}


#[test]
fn pagerank_matches_dense_oracle() {
    let mut r = common::rng(606);
    let variants = [
        PageRankOptions::default(),
        PageRankOptions {
            weighted: true,
            ..Default::default()
        },
        PageRankOptions {
            reversed: true,
            ..Default::default()
        },
    ];
    for i in 0..200 {
        let n = 1 + i % 30;
        let g = common::random_dag(&mut r, n, [0.1, 0.3][i % 2], 5);
        for opts in &variants {
            let got = pagerank(&g, opts).unwrap();
            let want = oracles::pagerank(&g, opts);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-8, "graph {i} {opts:?}: {a} vs {b}");
            }
        }
    }
}


#[test]
fn routing_profile_matches_naive_aggregation_exactly() {
    assert_eq!(RouteRegion::AnsExt.index(), 1);
    let mut r = common::rng(707);
    for i in 0..100 {
        let g = common::random_dag(&mut r, 5 + i % 40, 0.25, 8);
        for (attach, magnitude, normalize) in [
            (LayerAttach::Dst, true, false),
            (LayerAttach::Src, true, false),
            (LayerAttach::Dst, false, false),
            (LayerAttach::Dst, true, true),
        ] {
            let opts = RoutingOptions {
                attach,
                magnitude,
                normalize,
            };
            let p = routing_profile(&g, &opts);
            let (cells, residual) = oracles::routing(&g, &opts);
            assert_eq!(p.cells, cells, "graph {i} {opts:?}");
            assert_eq!(p.residual, residual, "graph {i} {opts:?}");
        }
    }
}
