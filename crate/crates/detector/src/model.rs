// SPDX-License-Identifier: MIT OR Apache-2.0

//! Graph-transformer classifier.
//!
//! Node features are projected to the hidden width, passed through `L`
//! encoder layers and pooled into a graph vector that also carries an
//! embedding of the topology signature:
//!
//! ```text
//! H0  = tanh(X W_in + b_in)
//! per layer:
//!   G  = in_mean ⊙ sigmoid(a_g E + b_g)          (gated mean over in-neighbors)
//!   H~ = H + dropout(tanh(G (H W_m + b_m)))
//!   S  = (H~ W_q)(H~ W_k)ᵀ / sqrt(d) + A ⊙ (a_s E + b_s)
//!   H  = H~ + dropout(softmax_rows(S) H~ W_v)
//! z      = [mean(H) ‖ sum(H) ‖ max(H) ‖ tanh(t W_g + b_g)]
//! logits = z W_out + b_out
//! ```
//!
//! `E` holds `tanh(weight)` at `[dst][src]`, `A` is the matching 0/1 mask and
//! `t` the standardized topology signature. Logit index 1 is the faithful class.

use std::fs;
use std::path::Path;

use attrgraph_core::Label;
use ndarray::Array2;
use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DetectorError, Result};
use crate::features::{GraphFeatures, NODE_FEATURE_DIM, TOPOLOGY_DIM};
use crate::tape::{Tape, Var};

pub const MODEL_FORMAT: &str = "attrgraph-detector";
pub const MODEL_VERSION: u32 = 1;
pub const NUM_CLASSES: usize = 2;

/// Architecture constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden: usize,
    pub layers: usize,
    /// Output width of the topology embedder; `0` removes the branch.
    pub topology_width: usize,
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 128,
            layers: 2,
            topology_width: 32,
            dropout: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn pooled_width(&self) -> usize {
        3 * self.hidden + self.topology_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    /// Uniform in `±1/sqrt(fan_in)`.
    FanIn(usize),
    Zero,
    One,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    init: Init,
}

const PER_LAYER: usize = 9;
const MP_W: usize = 0;
const MP_B: usize = 1;
const GATE_A: usize = 2;
const GATE_B: usize = 3;
const ATT_Q: usize = 4;
const ATT_K: usize = 5;
const ATT_V: usize = 6;
const BIAS_A: usize = 7;
const BIAS_B: usize = 8;

/// Ordered list of parameter tensors for an architecture.
pub fn param_layout(cfg: &ModelConfig) -> Vec<ParamSpec> {
    let d = cfg.hidden;
    let spec = |name: String, rows, cols, init| ParamSpec { name, rows, cols, init };
    let mut out = vec![
        spec("input.weight".into(), NODE_FEATURE_DIM, d, Init::FanIn(NODE_FEATURE_DIM)),
        spec("input.bias".into(), 1, d, Init::Zero),
    ];
    for l in 0..cfg.layers {
        out.extend([
            spec(format!("layer{l}.message.weight"), d, d, Init::FanIn(d)),
            spec(format!("layer{l}.message.bias"), 1, d, Init::Zero),
            spec(format!("layer{l}.message.gate_scale"), 1, 1, Init::One),
            spec(format!("layer{l}.message.gate_shift"), 1, 1, Init::Zero),
            spec(format!("layer{l}.attention.query"), d, d, Init::FanIn(d)),
            spec(format!("layer{l}.attention.key"), d, d, Init::FanIn(d)),
            spec(format!("layer{l}.attention.value"), d, d, Init::FanIn(d)),
            spec(format!("layer{l}.attention.edge_scale"), 1, 1, Init::One),
            spec(format!("layer{l}.attention.edge_shift"), 1, 1, Init::Zero),
        ]);
    }
    if cfg.topology_width > 0 {
        out.push(spec("topology.weight".into(), TOPOLOGY_DIM, cfg.topology_width, Init::FanIn(TOPOLOGY_DIM)));
        out.push(spec("topology.bias".into(), 1, cfg.topology_width, Init::Zero));
    }
    let p = cfg.pooled_width();
    out.push(spec("output.weight".into(), p, NUM_CLASSES, Init::FanIn(p)));
    out.push(spec("output.bias".into(), 1, NUM_CLASSES, Init::Zero));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub config: ModelConfig,
    /// Training-split mean of the raw topology signature.
    pub topology_mean: [f64; TOPOLOGY_DIM],
    /// Training-split standard deviation of the raw topology signature.
    pub topology_std: [f64; TOPOLOGY_DIM],
    /// Tensors in [`param_layout`] order.
    pub params: Vec<Array2<f64>>,
}

/// Tape handles of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardVars {
    pub embeddings: Var,
    pub pooled: Var,
    pub logits: Var,
}

impl DetectorModel {
    /// Seeded initialization. With `zero_head` the output layer starts at zero.
    pub fn new(config: ModelConfig, seed: u64, zero_head: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = param_layout(&config);
        let head = layout.len() - 2;
        let params = layout
            .iter()
            .enumerate()
            .map(|(i, s)| match s.init {
                Init::FanIn(_) if zero_head && i >= head => Array2::zeros((s.rows, s.cols)),
                Init::FanIn(fan_in) => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    let dist = Uniform::new_inclusive(-bound, bound);
                    Array2::from_shape_simple_fn((s.rows, s.cols), || dist.sample(&mut rng))
                }
                Init::Zero => Array2::zeros((s.rows, s.cols)),
                Init::One => Array2::ones((s.rows, s.cols)),
            })
            .collect();
        DetectorModel {
            config,
            topology_mean: [0.0; TOPOLOGY_DIM],
            topology_std: [1.0; TOPOLOGY_DIM],
            params,
        }
    }

    pub fn layout(&self) -> Vec<ParamSpec> {
        param_layout(&self.config)
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Array2::len).sum()
    }

    fn layer_base(l: usize) -> usize {
        2 + PER_LAYER * l
    }

    fn topology_base(&self) -> usize {
        2 + PER_LAYER * self.config.layers
    }

    fn output_base(&self) -> usize {
        self.params.len() - 2
    }

    /// Topology signature after standardization with the frozen statistics.
    pub fn standardize(&self, raw: &[f64; TOPOLOGY_DIM]) -> Array2<f64> {
        Array2::from_shape_fn((1, TOPOLOGY_DIM), |(_, k)| (raw[k] - self.topology_mean[k]) / self.topology_std[k])
    }

    /// Places every parameter on the tape, trainable or constant.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| if trainable { tape.param(p.clone()) } else { tape.constant(p.clone()) })
            .collect()
    }

    fn check_dims(&self, f: &GraphFeatures) -> Result<()> {
        let n = f.nodes.nrows();
        if n == 0 {
            return Err(DetectorError::EmptyGraph);
        }
        if f.nodes.ncols() != NODE_FEATURE_DIM {
            return Err(DetectorError::Dimension(format!(
                "node features have {} columns, expected {NODE_FEATURE_DIM}",
                f.nodes.ncols()
            )));
        }
        for (name, m) in [("edge matrix", &f.edge_matrix), ("adjacency", &f.adjacency), ("in_mean", &f.in_mean)] {
            if m.dim() != (n, n) {
                return Err(DetectorError::Dimension(format!("{name} is {:?}, expected ({n}, {n})", m.dim())));
            }
        }
        Ok(())
    }

    fn dropout(&self, tape: &mut Tape, x: Var, rng: Option<&mut ChaCha8Rng>) -> Var {
        let p = self.config.dropout;
        match rng {
            Some(rng) if p > 0.0 => {
                let keep = 1.0 / (1.0 - p);
                let mask = tape.value(x).mapv(|_| if rng.gen::<f64>() < p { 0.0 } else { keep });
                tape.mul_const(x, mask)
            }
            _ => x,
        }
    }

    /// Records the node encoder on `tape`; returns the final embeddings.
    pub fn encode_on(&self, tape: &mut Tape, p: &[Var], f: &GraphFeatures, mut rng: Option<&mut ChaCha8Rng>) -> Result<Var> {
        self.check_dims(f)?;
        let d = self.config.hidden;
        let x = tape.constant(f.nodes.clone());
        let e = tape.constant(f.edge_matrix.clone());
        let xw = tape.matmul(x, p[0]);
        let pre = tape.add_row(xw, p[1]);
        let mut h = tape.tanh(pre);
        for l in 0..self.config.layers {
            let b = Self::layer_base(l);
            // residual message passing
            let gate_pre = tape.scalar_affine(e, p[b + GATE_A], p[b + GATE_B]);
            let gate = tape.sigmoid(gate_pre);
            let g = tape.mul_const(gate, f.in_mean.clone());
            let hw = tape.matmul(h, p[b + MP_W]);
            let lin = tape.add_row(hw, p[b + MP_B]);
            let agg = tape.matmul(g, lin);
            let msg = tape.tanh(agg);
            let msg = self.dropout(tape, msg, rng.as_deref_mut());
            let h_mid = tape.add(h, msg);
            // residual global attention
            let q = tape.matmul(h_mid, p[b + ATT_Q]);
            let k = tape.matmul(h_mid, p[b + ATT_K]);
            let v = tape.matmul(h_mid, p[b + ATT_V]);
            let qk = tape.matmul_t(q, k);
            let scores = tape.scale(qk, 1.0 / (d as f64).sqrt());
            let bias_pre = tape.scalar_affine(e, p[b + BIAS_A], p[b + BIAS_B]);
            let bias = tape.mul_const(bias_pre, f.adjacency.clone());
            let scores = tape.add(scores, bias);
            let attn = tape.softmax_rows(scores);
            let mixed = tape.matmul(attn, v);
            let mixed = self.dropout(tape, mixed, rng.as_deref_mut());
            h = tape.add(h_mid, mixed);
        }
        Ok(h)
    }

    /// Records readout and output head on top of node embeddings.
    pub fn readout_on(&self, tape: &mut Tape, p: &[Var], embeddings: Var, topology: &[f64; TOPOLOGY_DIM]) -> (Var, Var) {
        let mean = tape.mean_rows(embeddings);
        let sum = tape.sum_rows(embeddings);
        let max = tape.max_rows(embeddings);
        let mut parts = vec![mean, sum, max];
        if self.config.topology_width > 0 {
            let tb = self.topology_base();
            let t = tape.constant(self.standardize(topology));
            let tw = tape.matmul(t, p[tb]);
            let tpre = tape.add_row(tw, p[tb + 1]);
            parts.push(tape.tanh(tpre));
        }
        let pooled = tape.concat_cols(&parts);
        let ob = self.output_base();
        let zw = tape.matmul(pooled, p[ob]);
        let logits = tape.add_row(zw, p[ob + 1]);
        (pooled, logits)
    }

    pub fn forward_on(
        &self,
        tape: &mut Tape,
        p: &[Var],
        f: &GraphFeatures,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardVars> {
        let embeddings = self.encode_on(tape, p, f, rng)?;
        let (pooled, logits) = self.readout_on(tape, p, embeddings, &f.topology);
        Ok(ForwardVars {
            embeddings,
            pooled,
            logits,
        })
    }

    /// Final node embeddings in evaluation mode.
    pub fn encode(&self, f: &GraphFeatures) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape, false);
        let h = self.encode_on(&mut tape, &p, f, None)?;
        Ok(tape.value(h).clone())
    }

    /// Graph vector `z` for given node embeddings.
    pub fn readout(&self, embeddings: &Array2<f64>, topology: &[f64; TOPOLOGY_DIM]) -> Array2<f64> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape, false);
        let h = tape.constant(embeddings.clone());
        let (pooled, _) = self.readout_on(&mut tape, &p, h, topology);
        tape.value(pooled).clone()
    }

    pub fn logits(&self, f: &GraphFeatures) -> Result<[f64; NUM_CLASSES]> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape, false);
        let out = self.forward_on(&mut tape, &p, f, None)?;
        let z = tape.value(out.logits);
        Ok([z[[0, 0]], z[[0, 1]]])
    }

    /// `p(y = 1 | G)` in evaluation mode.
    pub fn classify(&self, f: &GraphFeatures) -> Result<f64> {
        Ok(class_probabilities(self.logits(f)?)[1])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| DetectorError::io(path, e))
    }

    pub fn to_json(&self) -> String {
        let tensors = self
            .layout()
            .into_iter()
            .zip(&self.params)
            .map(|(s, p)| TensorRecord {
                name: s.name,
                shape: [s.rows, s.cols],
                data: p.iter().cloned().collect(),
            })
            .collect();
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config,
            node_feature_dim: NODE_FEATURE_DIM,
            topology_dim: TOPOLOGY_DIM,
            topology_mean: self.topology_mean.to_vec(),
            topology_std: self.topology_std.to_vec(),
            tensors,
        };
        let mut s = serde_json::to_string(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DetectorError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let bad = |message: String| DetectorError::ModelFormat {
            path: path.to_path_buf(),
            message,
        };
        let probe: Probe = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if probe.format != MODEL_FORMAT {
            return Err(bad(format!("unknown format `{}`", probe.format)));
        }
        if probe.version != MODEL_VERSION {
            return Err(DetectorError::ModelVersion {
                found: probe.version,
                expected: MODEL_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if file.node_feature_dim != NODE_FEATURE_DIM || file.topology_dim != TOPOLOGY_DIM {
            return Err(bad(format!(
                "feature widths {}/{} do not match {NODE_FEATURE_DIM}/{TOPOLOGY_DIM}",
                file.node_feature_dim, file.topology_dim
            )));
        }
        let stats = |v: Vec<f64>, what: &str| -> Result<[f64; TOPOLOGY_DIM]> {
            v.try_into().map_err(|_| bad(format!("{what} must have {TOPOLOGY_DIM} entries")))
        };
        let topology_mean = stats(file.topology_mean, "topology_mean")?;
        let topology_std = stats(file.topology_std, "topology_std")?;
        let layout = param_layout(&file.config);
        if layout.len() != file.tensors.len() {
            return Err(bad(format!("expected {} tensors, found {}", layout.len(), file.tensors.len())));
        }
        let mut params = Vec::with_capacity(layout.len());
        for (spec, t) in layout.iter().zip(file.tensors) {
            if t.name != spec.name || t.shape != [spec.rows, spec.cols] {
                return Err(bad(format!(
                    "tensor `{}` {:?} does not match expected `{}` [{}, {}]",
                    t.name, t.shape, spec.name, spec.rows, spec.cols
                )));
            }
            let a = Array2::from_shape_vec((spec.rows, spec.cols), t.data)
                .map_err(|e| bad(format!("tensor `{}`: {e}", spec.name)))?;
            params.push(a);
        }
        Ok(DetectorModel {
            config: file.config,
            topology_mean,
            topology_std,
            params,
        })
    }
}

/// Softmax over two logits.
pub fn class_probabilities(z: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let m = z[0].max(z[1]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// Decision rule: faithful iff `p >= 0.5`.
pub fn predict_label(p: f64) -> Label {
    if p >= 0.5 {
        Label::Correct
    } else {
        Label::Wrong
    }
}

#[derive(Deserialize)]
struct Probe {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: ModelConfig,
    node_feature_dim: usize,
    topology_dim: usize,
    topology_mean: Vec<f64>,
    topology_std: Vec<f64>,
    tensors: Vec<TensorRecord>,
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}
