// SPDX-License-Identifier: MIT OR Apache-2.0

//! Class-level structure of the synthetic generator.

use std::fs;

use attrgraph_core::io::{list_graph_files, load_dataset};
use attrgraph_core::metrics::{class_signature_report, summarize};
use attrgraph_core::profile::{layer_mass, MassMode, MID_LAYER_BAND};
use attrgraph_core::routing::{routing_profile, RouteRegion, RoutingOptions, LOW_LAYER_BAND};
use attrgraph_core::synth::{generate, generate_dataset, sample_seed, GenConfig};
use attrgraph_core::{Label, StructuralSignature};

fn class_means(seed: u64, n: usize) -> Vec<(&'static str, f64, f64)> {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GenConfig { seed, ..GenConfig::standard() };
    generate_dataset(n, &cfg, dir.path()).unwrap();
    let entries = load_dataset(dir.path()).unwrap();
    let rows = class_signature_report(&entries, &Default::default()).unwrap();
    rows.chunks(2)
        .map(|pair| {
            assert_eq!((pair[0].label, pair[1].label), (Label::Correct, Label::Wrong));
            (pair[0].metric, pair[0].mean, pair[1].mean)
        })
        .collect()
}

#[test]
fn all_six_metric_orderings_hold_across_seeds() {
    for seed in [7, 11, 2024] {
        let means = class_means(seed, 100);
        assert_eq!(means.len(), StructuralSignature::NAMES.len());
        for (metric, c, w) in means {
            let correct_higher = matches!(metric, "dag_l" | "avg_deg" | "density" | "t_branch");
            if correct_higher {
                assert!(c > w, "seed {seed}: {metric} correct {c} <= wrong {w}");
            } else {
                assert!(c < w, "seed {seed}: {metric} correct {c} >= wrong {w}");
            }
        }
    }
}

fn class_stat(seed: u64, n: usize, label: Label, f: impl Fn(&attrgraph_core::AttributionGraph) -> f64) -> f64 {
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let cfg = GenConfig { seed: sample_seed(seed, label, i), ..GenConfig::standard() };
            f(&generate(label, &cfg).unwrap())
        })
        .collect();
    summarize(&values).mean
}

#[test]
fn low_layer_routing_directionality() {
    let opts = RoutingOptions { normalize: true, ..Default::default() };
    let qq = |g: &_| routing_profile(g, &opts).band_share(&LOW_LAYER_BAND, RouteRegion::Q, RouteRegion::Q);
    let qext = |g: &_| routing_profile(g, &opts).band_share(&LOW_LAYER_BAND, RouteRegion::Q, RouteRegion::AnsExt);
    for seed in [7, 11, 2024] {
        let (c, w) = (class_stat(seed, 100, Label::Correct, qq), class_stat(seed, 100, Label::Wrong, qq));
        assert!(c > w, "seed {seed}: Q->Q {c} vs {w}");
        let (c, w) = (class_stat(seed, 100, Label::Correct, qext), class_stat(seed, 100, Label::Wrong, qext));
        assert!(c < w, "seed {seed}: Q->ANS_EXT {c} vs {w}");
    }
}

#[test]
fn correct_graphs_concentrate_mass_in_middle_layers() {
    let mid = |g: &_| layer_mass(g, MassMode::NodeCount).unwrap().band_mass(MID_LAYER_BAND);
    let early = |g: &_| layer_mass(g, MassMode::NodeCount).unwrap().band_mass(1..=7);
    let (c, w) = (class_stat(7, 100, Label::Correct, mid), class_stat(7, 100, Label::Wrong, mid));
    assert!(c > w, "mid band {c} vs {w}");
    let (c, w) = (class_stat(7, 100, Label::Correct, early), class_stat(7, 100, Label::Wrong, early));
    assert!(c < w, "early band {c} vs {w}");
}

#[test]
fn regeneration_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = GenConfig::standard();
    let mut names_a = generate_dataset(20, &cfg, a.path()).unwrap();
    let mut names_b = generate_dataset(20, &cfg, b.path()).unwrap();
    names_a.sort();
    names_b.sort();
    assert_eq!(names_a, names_b);
    for name in &names_a {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn seeds_change_the_dataset() {
    let cfg = |seed| GenConfig { seed, ..GenConfig::standard() };
    let a = generate(Label::Correct, &cfg(sample_seed(1, Label::Correct, 0))).unwrap();
    let b = generate(Label::Correct, &cfg(sample_seed(2, Label::Correct, 0))).unwrap();
    assert_ne!(a, b);
}

#[test]
fn one_per_class_gives_two_valid_labeled_files() {
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(1, &GenConfig::standard(), dir.path()).unwrap();
    let files = list_graph_files(dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let entries = load_dataset(dir.path()).unwrap();
    let labels: Vec<_> = entries.iter().map(|e| e.graph.label).collect();
    assert_eq!(labels, [Some(Label::Correct), Some(Label::Wrong)]);
    assert!(entries.iter().all(|e| e.graph.validate().is_valid()));
}

#[test]
fn infeasible_configs_are_rejected() {
    let mut cfg = GenConfig::standard();
    cfg.correct.depth_bias = 1.5;
    assert!(generate(Label::Correct, &cfg).is_err());
    let mut cfg = GenConfig::standard();
    cfg.layers_per_token = 0;
    assert!(generate_dataset(1, &cfg, tempfile::tempdir().unwrap().path()).is_err());
}
