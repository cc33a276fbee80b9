// SPDX-License-Identifier: MIT OR Apache-2.0

//! Region-level routing decomposition.
//!
//! For every layer, attribution mass is summed over all edges whose source and
//! target fall in a given pair of regions from {Q, ANS_EXT, ANS_INT}. Edges
//! touching CTX or INTERMEDIATE nodes land in a per-layer residual bucket so
//! that cells plus residual always account for the full edge mass.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::{AttributionGraph, Edge, Region};
use crate::io::DatasetEntry;
use crate::metrics::indices_by_label;

/// Default low-layer band for 32-layer models.
pub const LOW_LAYER_BAND: RangeInclusive<usize> = 0..=7;

/// Added to the relative-difference denominator.
pub const REL_DIFF_EPS: f64 = 1e-12;

/// The three regions tracked by the routing tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteRegion {
    Q,
    AnsExt,
    AnsInt,
}

impl RouteRegion {
    pub const ALL: [RouteRegion; 3] = [RouteRegion::Q, RouteRegion::AnsExt, RouteRegion::AnsInt];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_region(r: Region) -> Option<Self> {
        match r {
            Region::Question => Some(RouteRegion::Q),
            Region::AnswerExternal => Some(RouteRegion::AnsExt),
            Region::AnswerInternal => Some(RouteRegion::AnsInt),
            Region::Context | Region::Intermediate => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RouteRegion::Q => "Q",
            RouteRegion::AnsExt => "ANS_EXT",
            RouteRegion::AnsInt => "ANS_INT",
        }
    }
}

impl fmt::Display for RouteRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which endpoint's layer an edge's mass is booked to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LayerAttach {
    #[default]
    Dst,
    Src,
}

impl FromStr for LayerAttach {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dst" => Ok(LayerAttach::Dst),
            "src" => Ok(LayerAttach::Src),
            other => Err(format!("unknown layer attachment `{other}` (expected dst or src)")),
        }
    }
}

impl fmt::Display for LayerAttach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerAttach::Dst => "dst",
            LayerAttach::Src => "src",
        })
    }
}

/// Layer an edge's mass is attributed to.
pub fn assign_layer(graph: &AttributionGraph, edge: &Edge, attach: LayerAttach) -> usize {
    match attach {
        LayerAttach::Dst => graph.nodes[edge.dst].layer,
        LayerAttach::Src => graph.nodes[edge.src].layer,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingOptions {
    pub attach: LayerAttach,
    /// Use `|a|` instead of the signed weight.
    pub magnitude: bool,
    /// Rescale the 3×3 cells of each layer to sum to one.
    pub normalize: bool,
}

impl Default for RoutingOptions {
    fn default() -> Self {
        RoutingOptions {
            attach: LayerAttach::Dst,
            magnitude: true,
            normalize: false,
        }
    }
}

/// Per-layer 3×3 region-to-region mass, indexed `[layer][src][dst]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingProfile {
    pub cells: Vec<[[f64; 3]; 3]>,
    /// Unnormalized mass of edges with a CTX or INTERMEDIATE endpoint, per layer.
    pub residual: Vec<f64>,
    pub options: RoutingOptions,
}

impl RoutingProfile {
    pub fn num_layers(&self) -> usize {
        self.cells.len()
    }

    pub fn get(&self, layer: usize, src: RouteRegion, dst: RouteRegion) -> f64 {
        self.cells[layer][src.index()][dst.index()]
    }

    pub fn layer_total(&self, layer: usize) -> f64 {
        self.cells[layer].iter().flatten().sum()
    }

    /// Sum of one cell over a layer band (clipped to the profile depth).
    pub fn band_sum(&self, band: &RangeInclusive<usize>, src: RouteRegion, dst: RouteRegion) -> f64 {
        self.band_layers(band).map(|l| self.get(l, src, dst)).sum()
    }

    /// Share of one cell in the total 3×3 mass of a layer band; `0` if the band is empty.
    pub fn band_share(&self, band: &RangeInclusive<usize>, src: RouteRegion, dst: RouteRegion) -> f64 {
        let total: f64 = self.band_layers(band).map(|l| self.layer_total(l)).sum();
        if total == 0.0 {
            0.0
        } else {
            self.band_sum(band, src, dst) / total
        }
    }

    fn band_layers<'a>(&self, band: &'a RangeInclusive<usize>) -> impl Iterator<Item = usize> + 'a {
        let depth = self.num_layers();
        band.clone().filter(move |&l| l < depth)
    }
}

pub fn routing_profile(graph: &AttributionGraph, opts: &RoutingOptions) -> RoutingProfile {
    let depth = graph.num_layers;
    let mut cells = vec![[[0.0f64; 3]; 3]; depth];
    let mut residual = vec![0.0f64; depth];
    for e in &graph.edges {
        let layer = assign_layer(graph, e, opts.attach);
        let mass = if opts.magnitude { e.weight.abs() } else { e.weight };
        let src = RouteRegion::from_region(graph.nodes[e.src].region);
        let dst = RouteRegion::from_region(graph.nodes[e.dst].region);
        match (src, dst) {
            (Some(s), Some(d)) => cells[layer][s.index()][d.index()] += mass,
            _ => residual[layer] += mass,
        }
    }
    if opts.normalize {
        for layer in &mut cells {
            let total: f64 = layer.iter().flatten().sum();
            if total != 0.0 {
                layer.iter_mut().flatten().for_each(|c| *c /= total);
            }
        }
    }
    RoutingProfile {
        cells,
        residual,
        options: *opts,
    }
}

/// Share of question-to-question routing against question-to-external-answer
/// routing within a band. `1` is fully question-anchored, `0` fully
/// externally driven, `0.5` when neither is present.
pub fn qceg_score(graph: &AttributionGraph, band: &RangeInclusive<usize>, opts: &RoutingOptions) -> f64 {
    let p = routing_profile(graph, opts);
    let qq = p.band_sum(band, RouteRegion::Q, RouteRegion::Q);
    let qext = p.band_sum(band, RouteRegion::Q, RouteRegion::AnsExt);
    let denom = qq + qext;
    if denom == 0.0 {
        0.5
    } else {
        qq / (denom + REL_DIFF_EPS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingComparisonRow {
    pub layer: usize,
    pub src: RouteRegion,
    pub dst: RouteRegion,
    pub mean_correct: f64,
    pub mean_wrong: f64,
    /// `(c - w) / (c + w + eps)`.
    pub relative_difference: f64,
}

/// Class means of every routing cell, per layer, with relative differences.
pub fn class_routing_comparison(
    entries: &[DatasetEntry],
    opts: &RoutingOptions,
) -> Result<Vec<RoutingComparisonRow>> {
    let (correct, wrong) = indices_by_label(entries)?;
    let profiles: Vec<RoutingProfile> = entries.par_iter().map(|e| routing_profile(&e.graph, opts)).collect();
    let depth = profiles.iter().map(RoutingProfile::num_layers).max().unwrap_or(0);
    let mean = |idx: &[usize], l: usize, s: RouteRegion, d: RouteRegion| -> f64 {
        let sum: f64 = idx
            .iter()
            .filter(|&&i| l < profiles[i].num_layers())
            .map(|&i| profiles[i].get(l, s, d))
            .sum();
        sum / idx.len() as f64
    };
    let mut rows = Vec::with_capacity(depth * 9);
    for layer in 0..depth {
        for src in RouteRegion::ALL {
            for dst in RouteRegion::ALL {
                let c = mean(&correct, layer, src, dst);
                let w = mean(&wrong, layer, src, dst);
                rows.push(RoutingComparisonRow {
                    layer,
                    src,
                    dst,
                    mean_correct: c,
                    mean_wrong: w,
                    relative_difference: (c - w) / (c + w + REL_DIFF_EPS),
                });
            }
        }
    }
    Ok(rows)
}
