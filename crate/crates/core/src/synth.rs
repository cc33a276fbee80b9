// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic labeled attribution graphs.
//!
//! Correct-like graphs are built from long layer-following chains, dense
//! converging in-edges, mid-layer-heavy node placement and strong low-layer
//! question-to-question routing. Wrong-like graphs are sparse, shallow,
//! early-layer-heavy and organized around one low-layer external-answer hub
//! that pulls mass straight from the prompt.
//!
//! Every edge respects causal order (source position never after target
//! position) and points to a strictly higher layer, except the layer-0
//! question consolidation edges, which run forward in position.

use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributionGraph, Label, Region};
use crate::io::{save_graph, GRAPH_SUFFIX};

const LOW_BAND: RangeInclusive<usize> = 0..=7;
const MID_BAND: RangeInclusive<usize> = 8..=18;

/// Token counts per region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub question: usize,
    pub context: usize,
    pub answer_external: usize,
    pub answer_internal: usize,
}

impl TokenCounts {
    pub fn total(&self) -> usize {
        self.question + self.context + self.answer_external + self.answer_internal
    }
}

/// Structural knobs for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    /// Probability that a node forwards to a node in the next occupied layer.
    pub depth_bias: f64,
    /// Probability that an eligible node feeds the single hub.
    pub hub_bias: f64,
    /// Mean number of extra random in-edges per node.
    pub density_scale: f64,
    /// Probability of each forward edge among layer-0 question nodes.
    pub question_link: f64,
    /// Relative extra weight for placing nodes in layers 8–18.
    pub mid_layer_boost: f64,
    /// Relative extra weight for placing nodes in layers 0–7.
    pub early_layer_boost: f64,
    /// Weight multiplier `1 + x` for Q→Q edges landing in layers 0–7.
    pub qq_low_boost: f64,
    /// Weight multiplier `1 + x` for Q→ANS_EXT edges landing in layers 0–7.
    pub q_ansext_low_boost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_layers: usize,
    pub tokens: TokenCounts,
    /// Context token count varies uniformly by up to this much per sample.
    pub context_jitter: usize,
    /// Mean number of layers at which a token is active (one is always layer 0).
    pub layers_per_token: usize,
    pub correct: ClassProfile,
    pub wrong: ClassProfile,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig::standard()
    }
}

impl GenConfig {
    /// Default preset: 32 layers, contrasts sized to separate every metric.
    pub fn standard() -> Self {
        GenConfig {
            num_layers: 32,
            tokens: TokenCounts {
                question: 6,
                context: 10,
                answer_external: 3,
                answer_internal: 3,
            },
            context_jitter: 3,
            layers_per_token: 3,
            correct: ClassProfile {
                depth_bias: 0.9,
                hub_bias: 0.0,
                density_scale: 3.5,
                question_link: 0.6,
                mid_layer_boost: 2.0,
                early_layer_boost: 0.0,
                qq_low_boost: 2.0,
                q_ansext_low_boost: 0.0,
            },
            wrong: ClassProfile {
                depth_bias: 0.1,
                hub_bias: 0.8,
                density_scale: 0.5,
                question_link: 0.0,
                mid_layer_boost: 0.0,
                early_layer_boost: 2.0,
                qq_low_boost: 0.0,
                q_ansext_low_boost: 2.0,
            },
            seed: 7,
        }
    }

    /// Looks up a named preset.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" | "standard" => Some(GenConfig::standard()),
            _ => None,
        }
    }

    pub fn profile(&self, label: Label) -> &ClassProfile {
        match label {
            Label::Correct => &self.correct,
            Label::Wrong => &self.wrong,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InfeasibleConfig(msg));
        if self.num_layers == 0 {
            return bad("num_layers must be positive".into());
        }
        if self.tokens.total() == 0 {
            return bad("at least one token is required".into());
        }
        if self.context_jitter > self.tokens.context {
            return bad(format!(
                "context_jitter {} exceeds context token count {}",
                self.context_jitter, self.tokens.context
            ));
        }
        if self.layers_per_token == 0 || self.layers_per_token > self.num_layers {
            return bad(format!(
                "layers_per_token must be in 1..={}, got {}",
                self.num_layers, self.layers_per_token
            ));
        }
        for (name, p) in [("correct", &self.correct), ("wrong", &self.wrong)] {
            for (field, v) in [
                ("depth_bias", p.depth_bias),
                ("hub_bias", p.hub_bias),
                ("question_link", p.question_link),
            ] {
                if !(0.0..=1.0).contains(&v) {
                    return bad(format!("{name}.{field} = {v} is not a probability"));
                }
            }
            for (field, v) in [
                ("density_scale", p.density_scale),
                ("mid_layer_boost", p.mid_layer_boost),
                ("early_layer_boost", p.early_layer_boost),
                ("qq_low_boost", p.qq_low_boost),
                ("q_ansext_low_boost", p.q_ansext_low_boost),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return bad(format!("{name}.{field} = {v} must be finite and non-negative"));
                }
            }
            // Random in-edges are drawn without replacement from earlier nodes;
            // asking for more than a small graph can hold is meaningless.
            if p.density_scale > self.tokens.total() as f64 {
                return bad(format!(
                    "{name}.density_scale = {} exceeds the token count {}",
                    p.density_scale,
                    self.tokens.total()
                ));
            }
        }
        Ok(())
    }
}

fn class_name(label: Label) -> &'static str {
    match label {
        Label::Correct => "correct",
        Label::Wrong => "wrong",
    }
}

/// SplitMix64 finalizer, used to derive independent per-sample seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sample `index` of class `label` in a dataset generated from `seed`.
pub fn sample_seed(seed: u64, label: Label, index: usize) -> u64 {
    mix(mix(seed ^ mix(label.as_u8() as u64 + 1)) ^ index as u64)
}

struct Builder<'a> {
    graph: AttributionGraph,
    rng: ChaCha8Rng,
    profile: &'a ClassProfile,
    /// Membership of `(src, dst)` pairs, indexed `src * n + dst` once nodes are fixed.
    present: Vec<bool>,
}

impl Builder<'_> {
    fn can_link(&self, src: usize, dst: usize) -> bool {
        let (s, d) = (&self.graph.nodes[src], &self.graph.nodes[dst]);
        s.token_pos <= d.token_pos && s.layer < d.layer
    }

    fn base_weight(&mut self) -> f64 {
        let w = self.rng.gen_range(0.05..1.0);
        if self.rng.gen_bool(0.15) {
            -w
        } else {
            w
        }
    }

    fn link(&mut self, src: usize, dst: usize) {
        let n = self.graph.node_count();
        if self.present[src * n + dst] {
            return;
        }
        self.present[src * n + dst] = true;
        let mut w = self.base_weight();
        let (s, d) = (&self.graph.nodes[src], &self.graph.nodes[dst]);
        if LOW_BAND.contains(&d.layer) && s.region == Region::Question {
            match d.region {
                Region::Question => w *= 1.0 + self.profile.qq_low_boost,
                Region::AnswerExternal => w *= 1.0 + self.profile.q_ansext_low_boost,
                _ => {}
            }
        }
        self.graph.edges.push(crate::graph::Edge { src, dst, weight: w });
    }
}

/// Generates one labeled graph. Output depends only on `(label, config)`.
pub fn generate(label: Label, config: &GenConfig) -> Result<AttributionGraph> {
    config.check()?;
    let profile = config.profile(label);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let layers = config.num_layers;

    // Token layout: question, context, then shuffled answer tokens.
    let t = config.tokens;
    let jitter = config.context_jitter as i64;
    let context = (t.context as i64 + rng.gen_range(-jitter..=jitter)) as usize;
    let mut regions = vec![Region::Question; t.question];
    regions.extend(std::iter::repeat(Region::Context).take(context));
    let mut answer = vec![Region::AnswerExternal; t.answer_external];
    answer.extend(std::iter::repeat(Region::AnswerInternal).take(t.answer_internal));
    answer.shuffle(&mut rng);
    regions.extend(answer);

    // Node placement: every token lives at layer 0 plus a few weighted layers.
    let layer_weight = |l: usize| {
        let mut w = 1.0;
        if MID_BAND.contains(&l) {
            w += profile.mid_layer_boost;
        }
        if LOW_BAND.contains(&l) {
            w += profile.early_layer_boost;
        }
        w
    };
    let upper: Vec<usize> = (1..layers).collect();
    let mut placed: Vec<(usize, usize, Region)> = Vec::new();
    for (pos, &region) in regions.iter().enumerate() {
        placed.push((pos, 0, region));
        let extra = rng
            .gen_range(config.layers_per_token.saturating_sub(2)..=config.layers_per_token)
            .min(upper.len());
        let chosen = upper
            .choose_multiple_weighted(&mut rng, extra, |&l| layer_weight(l))
            .expect("layer weights are positive");
        let mut chosen: Vec<usize> = chosen.copied().collect();
        chosen.sort_unstable();
        placed.extend(chosen.into_iter().map(|l| (pos, l, region)));
    }
    placed.sort_by_key(|&(pos, layer, _)| (layer, pos));

    let mut graph = AttributionGraph::new(layers).with_label(label);
    for &(pos, layer, region) in &placed {
        graph.add_node(pos, layer, region);
    }
    let n = graph.node_count();
    let mut b = Builder {
        graph,
        rng,
        profile,
        present: vec![false; n * n],
    };

    // Question consolidation at layer 0.
    let q0: Vec<usize> = (0..n)
        .filter(|&v| b.graph.nodes[v].layer == 0 && b.graph.nodes[v].region == Region::Question)
        .collect();
    for (i, &u) in q0.iter().enumerate() {
        for &v in &q0[i + 1..] {
            if b.rng.gen_bool(profile.question_link) {
                b.link(u, v);
            }
        }
    }

    // Layer-following chains.
    for u in 0..n {
        if !b.rng.gen_bool(profile.depth_bias) {
            continue;
        }
        let next_layer = (0..n)
            .filter(|&v| b.can_link(u, v))
            .map(|v| b.graph.nodes[v].layer)
            .min();
        if let Some(layer) = next_layer {
            let targets: Vec<usize> = (0..n)
                .filter(|&v| b.graph.nodes[v].layer == layer && b.can_link(u, v))
                .collect();
            let v = targets[b.rng.gen_range(0..targets.len())];
            b.link(u, v);
        }
    }

    // Hub: a low-layer external-answer node fed directly by the prompt.
    if profile.hub_bias > 0.0 {
        let pick = |pred: &dyn Fn(usize) -> bool| (0..n).filter(|&v| pred(v)).collect::<Vec<_>>();
        let nodes = &b.graph.nodes;
        let mut candidates = pick(&|v| {
            nodes[v].region == Region::AnswerExternal && (3..=7).contains(&nodes[v].layer)
        });
        if candidates.is_empty() {
            candidates = pick(&|v| nodes[v].layer > 0 && nodes[v].layer <= 7);
        }
        if candidates.is_empty() {
            candidates = pick(&|v| nodes[v].layer > 0);
        }
        if !candidates.is_empty() {
            let hub = candidates[b.rng.gen_range(0..candidates.len())];
            for u in 0..n {
                if b.can_link(u, hub) && b.rng.gen_bool(profile.hub_bias) {
                    b.link(u, hub);
                }
            }
        }
    }

    // Random converging in-edges.
    if profile.density_scale > 0.0 {
        let poisson = Poisson::new(profile.density_scale).expect("positive rate");
        for v in 0..n {
            let sources: Vec<usize> = (0..n).filter(|&u| b.can_link(u, v)).collect();
            let k = (poisson.sample(&mut b.rng) as usize).min(sources.len());
            let chosen: Vec<usize> = sources.choose_multiple(&mut b.rng, k).copied().collect();
            for u in chosen {
                b.link(u, v);
            }
        }
    }

    let mut graph = b.graph;
    graph.meta.insert("generator".into(), "attrgraph-synth".into());
    graph.meta.insert("class".into(), class_name(label).into());
    graph.meta.insert("seed".into(), config.seed.to_string());
    debug_assert!(graph.validate().is_valid());
    Ok(graph)
}

/// File stem of sample `index` of a class.
pub fn sample_name(label: Label, index: usize) -> String {
    format!("g{index:05}_{}", class_name(label))
}

/// Writes `n_per_class` graphs of each class into `out_dir`.
///
/// Files are named `g<rank>_<class>.graph.json` with a zero-padded rank.
pub fn generate_dataset(n_per_class: usize, config: &GenConfig, out_dir: impl AsRef<Path>) -> Result<Vec<String>> {
    config.check()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let jobs: Vec<(Label, usize)> = (0..n_per_class)
        .flat_map(|i| [(Label::Correct, i), (Label::Wrong, i)])
        .collect();
    jobs.par_iter()
        .map(|&(label, i)| {
            let mut cfg = config.clone();
            cfg.seed = sample_seed(config.seed, label, i);
            let mut g = generate(label, &cfg)?;
            let name = sample_name(label, i);
            g.meta.insert("dataset".into(), "synthetic".into());
            g.meta.insert("example_id".into(), name.clone());
            let file = format!("{name}{GRAPH_SUFFIX}");
            save_graph(&g, out_dir.join(&file))?;
            Ok(file)
        })
        .collect()
}
