// SPDX-License-Identifier: MIT OR Apache-2.0

//! Attribution-graph data model.
//!
//! A graph is a set of `(token position, layer)` nodes, each tagged with a
//! functional [`Region`], joined by weighted edges that carry attribution
//! strength from an earlier computation state to a later one. Graphs are
//! immutable once built; [`AttributionGraph::validate`] checks every structural
//! invariant and reports violations instead of failing on the first one.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Functional token class of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    /// Question token.
    #[serde(rename = "Q")]
    Question,
    /// Retrieved-context token that does not belong to the answer.
    #[serde(rename = "CTX")]
    Context,
    /// Answer token attributable to retrieved context.
    #[serde(rename = "ANS_EXT")]
    AnswerExternal,
    /// Answer token composed internally by the model.
    #[serde(rename = "ANS_INT")]
    AnswerInternal,
    /// Aggregate of non-token activation units or any other position.
    #[serde(rename = "INTERMEDIATE")]
    Intermediate,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::Question,
        Region::Context,
        Region::AnswerExternal,
        Region::AnswerInternal,
        Region::Intermediate,
    ];

    /// Stable index in `0..5`, matching [`Region::ALL`].
    pub fn index(self) -> usize {
        match self {
            Region::Question => 0,
            Region::Context => 1,
            Region::AnswerExternal => 2,
            Region::AnswerInternal => 3,
            Region::Intermediate => 4,
        }
    }

    /// Wire-format name.
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Question => "Q",
            Region::Context => "CTX",
            Region::AnswerExternal => "ANS_EXT",
            Region::AnswerInternal => "ANS_INT",
            Region::Intermediate => "INTERMEDIATE",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binary outcome label attached to a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// `0`: wrong / unfaithful prediction.
    Wrong,
    /// `1`: correct / faithful prediction.
    Correct,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Wrong => 0,
            Label::Correct => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Wrong),
            1 => Some(Label::Correct),
            _ => None,
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Label::from_u8(v)
            .ok_or_else(|| serde::de::Error::custom(format!("label must be 0 or 1, got {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub token_pos: usize,
    pub layer: usize,
    pub region: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// Directed attribution graph over `(token position, layer)` nodes.
///
/// Field order mirrors the wire format so that serialization is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionGraph {
    pub num_layers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// A single violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ZeroLayers,
    NodeIdNotContiguous { position: usize, id: usize },
    LayerOutOfRange { node: usize, layer: usize, num_layers: usize },
    UnknownNodeId { edge: usize, id: usize },
    SelfLoop { edge: usize, node: usize },
    DuplicateEdge { edge: usize, src: usize, dst: usize },
    NonFiniteWeight { edge: usize },
    NonMonotoneEdge { edge: usize, src: usize, dst: usize },
    Cycle,
    ConflictingAnswerRegions { token_pos: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroLayers => write!(f, "num_layers must be positive"),
            Violation::NodeIdNotContiguous { position, id } => {
                write!(f, "node ids not contiguous: node at position {position} has id {id}")
            }
            Violation::LayerOutOfRange { node, layer, num_layers } => write!(
                f,
                "layer out of range: node {node} has layer {layer} >= num_layers {num_layers}"
            ),
            Violation::UnknownNodeId { edge, id } => {
                write!(f, "unknown node id {id} referenced by edge {edge}")
            }
            Violation::SelfLoop { edge, node } => write!(f, "self-loop on node {node} (edge {edge})"),
            Violation::DuplicateEdge { edge, src, dst } => {
                write!(f, "duplicate edge {src}->{dst} (edge {edge})")
            }
            Violation::NonFiniteWeight { edge } => write!(f, "non-finite weight on edge {edge}"),
            Violation::NonMonotoneEdge { edge, src, dst } => write!(
                f,
                "edge {edge} ({src}->{dst}) runs backwards in layer/position order"
            ),
            Violation::Cycle => write!(f, "cycle detected"),
            Violation::ConflictingAnswerRegions { token_pos } => write!(
                f,
                "token position {token_pos} carries both ANS_EXT and ANS_INT nodes"
            ),
        }
    }
}

/// Outcome of [`AttributionGraph::validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Compressed adjacency lists in both directions.
#[derive(Debug, Clone)]
pub struct Adjacency {
    out_offsets: Vec<usize>,
    out_targets: Vec<usize>,
    in_offsets: Vec<usize>,
    in_sources: Vec<usize>,
}

impl Adjacency {
    /// Builds adjacency for `n` nodes. Edges with out-of-range endpoints are skipped.
    pub fn new(n: usize, edges: &[Edge]) -> Self {
        let valid = |e: &&Edge| e.src < n && e.dst < n;
        let mut out_deg = vec![0usize; n];
        let mut in_deg = vec![0usize; n];
        for e in edges.iter().filter(valid) {
            out_deg[e.src] += 1;
            in_deg[e.dst] += 1;
        }
        let prefix = |deg: &[usize]| {
            let mut off = Vec::with_capacity(n + 1);
            off.push(0);
            for d in deg {
                off.push(off.last().unwrap() + d);
            }
            off
        };
        let out_offsets = prefix(&out_deg);
        let in_offsets = prefix(&in_deg);
        let mut out_targets = vec![0; out_offsets[n]];
        let mut in_sources = vec![0; in_offsets[n]];
        let mut out_fill = out_offsets.clone();
        let mut in_fill = in_offsets.clone();
        for e in edges.iter().filter(valid) {
            out_targets[out_fill[e.src]] = e.dst;
            out_fill[e.src] += 1;
            in_sources[in_fill[e.dst]] = e.src;
            in_fill[e.dst] += 1;
        }
        Adjacency {
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    pub fn node_count(&self) -> usize {
        self.out_offsets.len() - 1
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.out_targets[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    /// Kahn's algorithm. Returns `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.node_count();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.in_degree(v)).collect();
        let mut stack: Vec<usize> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in self.successors(v) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

impl AttributionGraph {
    /// Empty graph with the given depth.
    pub fn new(num_layers: usize) -> Self {
        AttributionGraph {
            num_layers,
            label: None,
            meta: BTreeMap::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Appends a node and returns its id.
    pub fn add_node(&mut self, token_pos: usize, layer: usize, region: Region) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            token_pos,
            layer,
            region,
            token_text: None,
        });
        id
    }

    /// Adds an edge, summing into an existing `(src, dst)` edge if present.
    pub fn add_edge(&mut self, src: usize, dst: usize, weight: f64) {
        if let Some(e) = self.edges.iter_mut().find(|e| e.src == src && e.dst == dst) {
            e.weight += weight;
        } else {
            self.edges.push(Edge { src, dst, weight });
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self.nodes.len(), &self.edges)
    }

    /// Topological order of node ids, or `None` if the graph is cyclic.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        self.adjacency().topological_order()
    }

    /// Merges parallel `(src, dst)` edges by summing their weights, keeping
    /// first-occurrence order.
    pub fn presum_parallel_edges(&mut self) {
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(self.edges.len());
        let mut merged: Vec<Edge> = Vec::with_capacity(self.edges.len());
        for e in self.edges.drain(..) {
            match index.get(&(e.src, e.dst)) {
                Some(&i) => merged[i].weight += e.weight,
                None => {
                    index.insert((e.src, e.dst), merged.len());
                    merged.push(e);
                }
            }
        }
        self.edges = merged;
    }

    /// Returns a copy whose node `i` becomes node `perm[i]`. Edge order is kept.
    pub fn relabeled(&self, perm: &[usize]) -> AttributionGraph {
        assert_eq!(perm.len(), self.nodes.len(), "permutation length mismatch");
        let mut nodes = self.nodes.clone();
        for (old, node) in self.nodes.iter().enumerate() {
            let mut n = node.clone();
            n.id = perm[old];
            nodes[perm[old]] = n;
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                src: perm[e.src],
                dst: perm[e.dst],
                weight: e.weight,
            })
            .collect();
        AttributionGraph {
            num_layers: self.num_layers,
            label: self.label,
            meta: self.meta.clone(),
            nodes,
            edges,
        }
    }

    /// Checks every structural invariant and collects the violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.nodes.len();
        if self.num_layers == 0 {
            violations.push(Violation::ZeroLayers);
        }
        for (pos, node) in self.nodes.iter().enumerate() {
            if node.id != pos {
                violations.push(Violation::NodeIdNotContiguous { position: pos, id: node.id });
            }
            if node.layer >= self.num_layers {
                violations.push(Violation::LayerOutOfRange {
                    node: node.id,
                    layer: node.layer,
                    num_layers: self.num_layers,
                });
            }
        }

        let mut answer_region: BTreeMap<usize, Region> = BTreeMap::new();
        let mut conflicts = BTreeSet::new();
        for node in &self.nodes {
            if matches!(node.region, Region::AnswerExternal | Region::AnswerInternal) {
                let seen = *answer_region.entry(node.token_pos).or_insert(node.region);
                if seen != node.region {
                    conflicts.insert(node.token_pos);
                }
            }
        }
        violations.extend(
            conflicts
                .into_iter()
                .map(|token_pos| Violation::ConflictingAnswerRegions { token_pos }),
        );

        let mut seen = HashMap::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            let mut endpoints_known = true;
            for id in [e.src, e.dst] {
                if id >= n {
                    violations.push(Violation::UnknownNodeId { edge: i, id });
                    endpoints_known = false;
                }
            }
            if e.src == e.dst {
                violations.push(Violation::SelfLoop { edge: i, node: e.src });
            }
            if !e.weight.is_finite() {
                violations.push(Violation::NonFiniteWeight { edge: i });
            }
            if seen.insert((e.src, e.dst), i).is_some() {
                violations.push(Violation::DuplicateEdge {
                    edge: i,
                    src: e.src,
                    dst: e.dst,
                });
            }
            if endpoints_known && e.src != e.dst {
                let (s, d) = (&self.nodes[e.src], &self.nodes[e.dst]);
                let monotone = s.layer < d.layer || (s.layer == d.layer && s.token_pos < d.token_pos);
                if !monotone {
                    violations.push(Violation::NonMonotoneEdge {
                        edge: i,
                        src: e.src,
                        dst: e.dst,
                    });
                }
            }
        }

        if self.topological_order().is_none() {
            violations.push(Violation::Cycle);
        }
        ValidationReport { violations }
    }
}
