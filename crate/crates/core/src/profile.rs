// SPDX-License-Identifier: MIT OR Apache-2.0

//! Layer-wise attribution mass.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::AttributionGraph;
use crate::io::DatasetEntry;
use crate::metrics::indices_by_label;

/// Default middle-layer band for 32-layer models.
pub const MID_LAYER_BAND: RangeInclusive<usize> = 8..=18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassMode {
    /// Share of nodes present at each layer.
    #[default]
    NodeCount,
    /// Share of `|weight|` over edges whose target sits at each layer.
    InAttribution,
}

impl MassMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MassMode::NodeCount => "node_count",
            MassMode::InAttribution => "in_attribution",
        }
    }
}

impl fmt::Display for MassMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MassMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node_count" => Ok(MassMode::NodeCount),
            "in_attribution" => Ok(MassMode::InAttribution),
            other => Err(format!("unknown mass mode `{other}` (expected node_count or in_attribution)")),
        }
    }
}

/// Normalized per-layer mass; entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerProfile {
    pub mass: Vec<f64>,
}

impl LayerProfile {
    pub fn num_layers(&self) -> usize {
        self.mass.len()
    }

    /// Total mass inside a layer band (clipped to the profile depth).
    pub fn band_mass(&self, band: RangeInclusive<usize>) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(l, _)| band.contains(l))
            .map(|(_, m)| m)
            .sum()
    }
}

pub fn layer_mass(graph: &AttributionGraph, mode: MassMode) -> Result<LayerProfile> {
    let mut mass = vec![0.0f64; graph.num_layers];
    match mode {
        MassMode::NodeCount => {
            for n in &graph.nodes {
                mass[n.layer] += 1.0;
            }
        }
        MassMode::InAttribution => {
            for e in &graph.edges {
                mass[graph.nodes[e.dst].layer] += e.weight.abs();
            }
        }
    }
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Err(Error::NoMass);
    }
    mass.iter_mut().for_each(|m| *m /= total);
    Ok(LayerProfile { mass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerDiffRow {
    pub layer: usize,
    pub mean_correct: f64,
    pub mean_wrong: f64,
    /// `mean_correct - mean_wrong`.
    pub difference: f64,
}

/// Per-layer class means of the normalized layer profile.
///
/// Graphs of different depth are zero-padded to the deepest one.
pub fn class_layer_diff(entries: &[DatasetEntry], mode: MassMode) -> Result<Vec<LayerDiffRow>> {
    let (correct, wrong) = indices_by_label(entries)?;
    let profiles: Vec<LayerProfile> = entries
        .par_iter()
        .map(|e| layer_mass(&e.graph, mode))
        .collect::<Result<_>>()?;
    let depth = profiles.iter().map(LayerProfile::num_layers).max().unwrap_or(0);
    let class_mean = |idx: &[usize]| -> Vec<f64> {
        let mut acc = vec![0.0; depth];
        for &i in idx {
            for (a, m) in acc.iter_mut().zip(&profiles[i].mass) {
                *a += m;
            }
        }
        acc.iter().map(|a| a / idx.len() as f64).collect()
    };
    let (mc, mw) = (class_mean(&correct), class_mean(&wrong));
    Ok((0..depth)
        .map(|layer| LayerDiffRow {
            layer,
            mean_correct: mc[layer],
            mean_wrong: mw[layer],
            difference: mc[layer] - mw[layer],
        })
        .collect())
}
