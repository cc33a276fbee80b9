// SPDX-License-Identifier: MIT OR Apache-2.0

//! Small pre-norm decoder-only transformer over a character vocabulary.
//!
//! Weights are drawn once from a seeded generator and never change. Every
//! forward pass re-runs the full sequence (no key/value cache) and can pass
//! each attention row through an [`InterventionPlan`] hook between the
//! softmax and the value aggregation.

use ndarray::{s, Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{InterventionError, Result};
use crate::plan::{apply_hook, InterventionPlan, RegionMap, TokenRegion};

/// Newline followed by printable ASCII.
pub fn vocabulary() -> Vec<char> {
    std::iter::once('\n').chain(' '..='~').collect()
}

pub fn encode(text: &str) -> Result<Vec<usize>> {
    text.chars()
        .map(|c| match c {
            '\n' => Ok(0),
            ' '..='~' => Ok(c as usize - ' ' as usize + 1),
            other => Err(InterventionError::UnknownChar(other)),
        })
        .collect()
}

pub fn decode(tokens: &[usize]) -> String {
    let vocab = vocabulary();
    tokens.iter().map(|&t| vocab[t]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyConfig {
    pub num_layers: usize,
    pub width: usize,
    pub heads: usize,
    pub mlp_width: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            num_layers: 8,
            width: 64,
            heads: 2,
            mlp_width: 256,
            max_len: 512,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Block {
    ln1: (Array1<f64>, Array1<f64>),
    wq: Array2<f64>,
    wk: Array2<f64>,
    wv: Array2<f64>,
    wo: Array2<f64>,
    ln2: (Array1<f64>, Array1<f64>),
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct ToyTransformer {
    pub config: ToyConfig,
    embed: Array2<f64>,
    pos: Array2<f64>,
    blocks: Vec<Block>,
    ln_f: (Array1<f64>, Array1<f64>),
    unembed: Array2<f64>,
}

/// Region-aggregated attention mass `[query region][key region]`, summed over rows and heads.
pub type RegionMass = [[f64; 3]; 3];

/// Attention captured at one layer during one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LayerCapture {
    /// Softmax output before the hook.
    pub before: RegionMass,
    /// After scaling, before renormalization.
    pub scaled: RegionMass,
    /// Rows handed to value aggregation.
    pub after: RegionMass,
    /// Largest `|row sum - 1|` before the hook.
    pub max_row_error_before: f64,
    /// Largest `|row sum - 1|` after the hook.
    pub max_row_error_after: f64,
}

impl LayerCapture {
    pub fn accumulate(&mut self, other: &LayerCapture) {
        for (dst, src) in [(&mut self.before, &other.before), (&mut self.scaled, &other.scaled), (&mut self.after, &other.after)] {
            for x in 0..3 {
                for y in 0..3 {
                    dst[x][y] += src[x][y];
                }
            }
        }
        self.max_row_error_before = self.max_row_error_before.max(other.max_row_error_before);
        self.max_row_error_after = self.max_row_error_after.max(other.max_row_error_after);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    /// Next-token logits at the last position.
    pub logits: Vec<f64>,
    pub layers: Vec<LayerCapture>,
}

fn layer_norm(x: &Array2<f64>, (g, b): &(Array1<f64>, Array1<f64>)) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let n = row.len() as f64;
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let inv = 1.0 / (var + 1e-5).sqrt();
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - mean) * inv * g[j] + b[j];
        }
    }
    out
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (x + 0.044715 * x.powi(3))).tanh())
}

impl ToyTransformer {
    pub fn new(config: ToyConfig) -> Self {
        assert!(config.width % config.heads == 0, "width must divide evenly into heads");
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut normal = |rows: usize, cols: usize, std: f64| {
            let d = Normal::new(0.0, std).expect("positive std");
            Array2::from_shape_simple_fn((rows, cols), || d.sample(&mut rng))
        };
        let (v, d, m) = (vocabulary().len(), config.width, config.mlp_width);
        let lin = 1.0 / (d as f64).sqrt();
        let ln = || (Array1::ones(d), Array1::zeros(d));
        let embed = normal(v, d, 1.0);
        let pos = normal(config.max_len, d, 0.5);
        let blocks = (0..config.num_layers)
            .map(|_| Block {
                ln1: ln(),
                // sharper query/key projections keep attention away from uniform
                wq: normal(d, d, 2.0 * lin),
                wk: normal(d, d, 2.0 * lin),
                wv: normal(d, d, lin),
                wo: normal(d, d, lin),
                ln2: ln(),
                w1: normal(d, m, lin),
                b1: Array1::zeros(m),
                w2: normal(m, d, 1.0 / (m as f64).sqrt()),
                b2: Array1::zeros(d),
            })
            .collect();
        let unembed = normal(d, v, lin);
        ToyTransformer {
            config,
            embed,
            pos,
            blocks,
            ln_f: ln(),
            unembed,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.config.num_layers
    }

    /// Runs the full sequence once. `regions` must cover every token.
    pub fn forward(&self, tokens: &[usize], regions: &RegionMap, plan: Option<&InterventionPlan>) -> Result<ForwardOutput> {
        let n = tokens.len();
        if n == 0 {
            return Err(InterventionError::EmptyPrompt);
        }
        if n > self.config.max_len {
            return Err(InterventionError::ContextOverflow {
                len: n,
                max: self.config.max_len,
            });
        }
        if regions.len() != n {
            return Err(InterventionError::Regions(format!("{} regions for {n} tokens", regions.len())));
        }
        let d = self.config.width;
        let dh = d / self.config.heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut x = Array2::from_shape_fn((n, d), |(i, j)| self.embed[[tokens[i], j]] + self.pos[[i, j]]);
        let mut captures = Vec::with_capacity(self.blocks.len());

        for (layer, blk) in self.blocks.iter().enumerate() {
            let h = layer_norm(&x, &blk.ln1);
            let (q, k, v) = (h.dot(&blk.wq), h.dot(&blk.wk), h.dot(&blk.wv));
            let mut mixed = Array2::zeros((n, d));
            let mut cap = LayerCapture::default();
            for head in 0..self.config.heads {
                let cols = s![.., head * dh..(head + 1) * dh];
                let (qh, kh, vh) = (q.slice(cols), k.slice(cols), v.slice(cols));
                let scores = qh.dot(&kh.t());
                for i in 0..n {
                    let raw = scores.slice(s![i, ..=i]);
                    let m = raw.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    let e: Vec<f64> = raw.iter().map(|s| ((s - m) * scale).exp()).collect();
                    let z: f64 = e.iter().sum();
                    let row: Vec<f64> = e.iter().map(|x| x / z).collect();
                    let hooked = match plan {
                        Some(p) => apply_hook(&row, regions, p, layer, i)?,
                        None => crate::plan::HookedRow {
                            scaled: row.clone(),
                            output: row.clone(),
                        },
                    };
                    let qr = regions.get(i).index();
                    for j in 0..=i {
                        let kr = regions.get(j).index();
                        cap.before[qr][kr] += row[j];
                        cap.scaled[qr][kr] += hooked.scaled[j];
                        cap.after[qr][kr] += hooked.output[j];
                    }
                    let err = |r: &[f64]| (r.iter().sum::<f64>() - 1.0).abs();
                    cap.max_row_error_before = cap.max_row_error_before.max(err(&row));
                    cap.max_row_error_after = cap.max_row_error_after.max(err(&hooked.output));
                    let mut out = mixed.slice_mut(s![i, head * dh..(head + 1) * dh]);
                    for (j, w) in hooked.output.iter().enumerate() {
                        out.scaled_add(*w, &vh.row(j));
                    }
                }
            }
            x = x + mixed.dot(&blk.wo);
            let h2 = layer_norm(&x, &blk.ln2);
            let mut hidden = h2.dot(&blk.w1) + &blk.b1;
            hidden.mapv_inplace(gelu);
            x = x + hidden.dot(&blk.w2) + &blk.b2;
            captures.push(cap);
        }
        let last = layer_norm(&x.slice(s![n - 1..n, ..]).to_owned(), &self.ln_f);
        let logits = last.dot(&self.unembed).index_axis(Axis(0), 0).to_vec();
        Ok(ForwardOutput { logits, layers: captures })
    }
}

/// Index of the largest logit; ties resolve to the lowest index.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Greedy decoding output with per-step, per-layer captures.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub generated: Vec<usize>,
    pub step_logits: Vec<Vec<f64>>,
    /// `captures[step][layer]`.
    pub captures: Vec<Vec<LayerCapture>>,
    pub regions: RegionMap,
}

impl Decoded {
    pub fn text(&self) -> String {
        decode(&self.generated)
    }

    /// Captures summed over steps, per layer.
    pub fn totals(&self) -> Vec<LayerCapture> {
        let layers = self.captures.first().map_or(0, Vec::len);
        let mut out = vec![LayerCapture::default(); layers];
        for step in &self.captures {
            for (acc, c) in out.iter_mut().zip(step) {
                acc.accumulate(c);
            }
        }
        out
    }
}

/// Greedy decoding for `steps` tokens, hooking every forward pass with `plan` when given.
pub fn decode_with_control(
    model: &ToyTransformer,
    prompt: &[usize],
    regions: &RegionMap,
    plan: Option<&InterventionPlan>,
    steps: usize,
) -> Result<Decoded> {
    if prompt.is_empty() {
        return Err(InterventionError::EmptyPrompt);
    }
    if regions.len() != prompt.len() || regions.prompt_len() != prompt.len() {
        return Err(InterventionError::Regions(format!(
            "region map covers {} positions, prompt has {}",
            regions.len(),
            prompt.len()
        )));
    }
    if let Some(p) = plan {
        p.validate(model.num_layers())?;
    }
    let mut tokens = prompt.to_vec();
    let mut regions = regions.clone();
    let mut out = Decoded {
        generated: Vec::with_capacity(steps),
        step_logits: Vec::with_capacity(steps),
        captures: Vec::with_capacity(steps),
        regions: regions.clone(),
    };
    for _ in 0..steps {
        let f = model.forward(&tokens, &regions, plan)?;
        let next = argmax(&f.logits);
        tokens.push(next);
        regions.push_generated();
        out.generated.push(next);
        out.step_logits.push(f.logits);
        out.captures.push(f.layers);
    }
    out.regions = regions;
    Ok(out)
}

/// Row-conditional share `M[x][y] / Σ_y M[x][y]`, or zero for an empty row.
pub fn share(m: &RegionMass, query: TokenRegion, key: TokenRegion) -> f64 {
    let row = &m[query.index()];
    let total: f64 = row.iter().sum();
    if total > 0.0 {
        row[key.index()] / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftRow {
    pub layer: usize,
    pub query: TokenRegion,
    pub key: TokenRegion,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

/// Per-layer, per-region-pair share before and after, with the difference.
pub fn routing_shift_report(before: &[RegionMass], after: &[RegionMass]) -> Result<Vec<ShiftRow>> {
    if before.len() != after.len() {
        return Err(InterventionError::ShapeMismatch(format!(
            "{} layers before, {} after",
            before.len(),
            after.len()
        )));
    }
    let mut rows = Vec::with_capacity(before.len() * 9);
    for (layer, (b, a)) in before.iter().zip(after).enumerate() {
        for query in TokenRegion::ALL {
            for key in TokenRegion::ALL {
                let (sb, sa) = (share(b, query, key), share(a, query, key));
                rows.push(ShiftRow {
                    layer,
                    query,
                    key,
                    before: sb,
                    after: sa,
                    delta: sa - sb,
                });
            }
        }
    }
    Ok(rows)
}

/// Shift rows comparing pre-hook and post-hook attention of one decoding run.
pub fn decoded_shift_report(decoded: &Decoded) -> Vec<ShiftRow> {
    let totals = decoded.totals();
    let before: Vec<RegionMass> = totals.iter().map(|c| c.before).collect();
    let after: Vec<RegionMass> = totals.iter().map(|c| c.after).collect();
    routing_shift_report(&before, &after).expect("same layer count")
}

/// Context passage used when no prompt is supplied.
pub const DEMO_CONTEXT: &str = "The bridge over the Vale river was built in 1889 by the engineer Ada Moss. \
A second bridge, opened in 1921, carries the rail line north.";
/// Question used when no prompt is supplied.
pub const DEMO_QUESTION: &str = "Who built the first bridge over the Vale river?";

/// Builds `Context: ...\nQuestion: ...\nAnswer:` with the context line as `Ex` and the rest as `Q`.
pub fn rag_prompt(context: &str, question: &str) -> Result<(Vec<usize>, RegionMap)> {
    let ctx = format!("Context: {context}\n");
    let q = format!("Question: {question}\nAnswer:");
    let tokens = encode(&(ctx.clone() + &q))?;
    let n_ctx = ctx.chars().count();
    let regions = RegionMap::from_ranges(tokens.len(), &[n_ctx..tokens.len()], &[0..n_ctx])?;
    Ok((tokens, regions))
}
