// SPDX-License-Identifier: MIT OR Apache-2.0

//! Mini-batch training with AdamW and validation-based model selection.

use attrgraph_core::Label;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DetectorError, Result};
use crate::features::{fit_standardizer, GraphFeatures};
use crate::model::{class_probabilities, predict_label, DetectorModel, ModelConfig};
use crate::tape::Tape;

/// A featurized, labeled graph.
#[derive(Debug, Clone)]
pub struct Example {
    pub id: String,
    pub features: GraphFeatures,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub zero_head: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
            seed: 7,
            zero_head: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss with dropout active.
    pub train_loss: f64,
    /// Training accuracy of the dropout forward passes.
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    /// Validation accuracy of the starting parameters.
    pub initial_val_accuracy: f64,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept; `0` means the initialization.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
}

/// AdamW with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: i32,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl AdamW {
    pub fn new(params: &[Array2<f64>], cfg: &TrainConfig) -> Self {
        let zeros: Vec<_> = params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
        AdamW {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.epsilon,
            weight_decay: cfg.weight_decay,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, params: &mut [Array2<f64>], grads: &[Array2<f64>]) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let (lr, b1, b2, eps, wd) = (self.lr, self.beta1, self.beta2, self.eps, self.weight_decay);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *p -= lr * wd * *p;
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
            });
        }
    }
}

fn target(label: Label) -> usize {
    label.as_u8() as usize
}

/// Loss, `p(y=1)` and parameter gradients for one example.
fn example_grad(
    model: &DetectorModel,
    f: &GraphFeatures,
    label: Label,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, f64, Vec<Array2<f64>>)> {
    let mut tape = Tape::new();
    let p = model.bind(&mut tape, true);
    let out = model.forward_on(&mut tape, &p, f, rng)?;
    let z = tape.value(out.logits);
    let prob = class_probabilities([z[[0, 0]], z[[0, 1]]])[1];
    let loss = tape.cross_entropy(out.logits, target(label));
    let value = tape.scalar(loss);
    let mut grads = tape.backward(loss);
    let g = p
        .iter()
        .zip(&model.params)
        .map(|(&v, w)| grads.take(v).unwrap_or_else(|| Array2::zeros(w.raw_dim())))
        .collect();
    Ok((value, prob, g))
}

/// Mean cross-entropy over a batch and its gradient, in evaluation mode.
pub fn batch_loss_and_grad(model: &DetectorModel, batch: &[(&GraphFeatures, Label)]) -> Result<(f64, Vec<Array2<f64>>)> {
    let per: Vec<_> = batch
        .par_iter()
        .map(|(f, y)| example_grad(model, f, *y, None))
        .collect::<Result<_>>()?;
    Ok(reduce_mean(model, per.into_iter().map(|(l, _, g)| (l, g))))
}

/// Mean cross-entropy over a batch in evaluation mode.
pub fn batch_loss(model: &DetectorModel, batch: &[(&GraphFeatures, Label)]) -> Result<f64> {
    let losses: Vec<f64> = batch
        .par_iter()
        .map(|(f, y)| -> Result<f64> {
            let z = model.logits(f)?;
            Ok(-class_probabilities(z)[target(*y)].ln())
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / batch.len() as f64)
}

fn reduce_mean(model: &DetectorModel, items: impl Iterator<Item = (f64, Vec<Array2<f64>>)>) -> (f64, Vec<Array2<f64>>) {
    let mut total = 0.0;
    let mut count = 0usize;
    let mut acc: Vec<Array2<f64>> = model.params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
    for (l, g) in items {
        total += l;
        count += 1;
        for (a, gi) in acc.iter_mut().zip(&g) {
            *a += gi;
        }
    }
    let inv = 1.0 / count.max(1) as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    (total * inv, acc)
}

/// Dropout stream for one training example, independent of thread scheduling.
fn example_rng(seed: u64, epoch: usize, position: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(epoch as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(position as u64).to_le_bytes());
    key[24..].copy_from_slice(b"dropout\0");
    ChaCha8Rng::from_seed(key)
}

/// Per-example `p(y=1)` in evaluation mode, in input order.
pub fn predict_all(model: &DetectorModel, examples: &[Example]) -> Result<Vec<f64>> {
    examples.par_iter().map(|e| model.classify(&e.features)).collect()
}

/// Mean loss and accuracy in evaluation mode.
pub fn evaluate_examples(model: &DetectorModel, examples: &[Example]) -> Result<(f64, f64)> {
    if examples.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let probs = predict_all(model, examples)?;
    let mut loss = 0.0;
    let mut hits = 0usize;
    for (p, e) in probs.iter().zip(examples) {
        let py = if e.label == Label::Correct { *p } else { 1.0 - p };
        loss -= py.ln();
        hits += usize::from(predict_label(*p) == e.label);
    }
    let n = examples.len() as f64;
    Ok((loss / n, hits as f64 / n))
}

/// Trains a fresh model. The returned parameters are those of the epoch with the
/// best validation accuracy (earliest on ties), or the last epoch without a
/// validation set.
pub fn train(train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<(DetectorModel, TrainingLog)> {
    let mut model = DetectorModel::new(cfg.model, cfg.seed, cfg.zero_head);
    let sigs: Vec<_> = train.iter().map(|e| e.features.topology).collect();
    let (mean, std) = fit_standardizer(&sigs);
    model.topology_mean = mean;
    model.topology_std = std;
    train_from(model, train, val, cfg)
}

/// Continues training an existing model (standardization left unchanged).
pub fn train_from(
    mut model: DetectorModel,
    train: &[Example],
    val: &[Example],
    cfg: &TrainConfig,
) -> Result<(DetectorModel, TrainingLog)> {
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order_rng.set_stream(1);
    let mut opt = AdamW::new(&model.params, cfg);
    let mut best = model.clone();
    let mut best_epoch = 0;
    let initial_val_accuracy = evaluate_examples(&model, val)?.1;
    let mut best_acc = initial_val_accuracy;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut order_rng);
        let (mut loss_sum, mut hits) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            let per: Vec<_> = chunk
                .par_iter()
                .enumerate()
                .map(|(k, &i)| {
                    let mut rng = example_rng(cfg.seed, epoch, b * cfg.batch_size + k);
                    let e = &train[i];
                    example_grad(&model, &e.features, e.label, Some(&mut rng)).map(|r| (r, e.label))
                })
                .collect::<Result<_>>()?;
            for ((l, p, _), y) in &per {
                loss_sum += l;
                hits += usize::from(predict_label(*p) == *y);
            }
            let (_, grads) = reduce_mean(&model, per.into_iter().map(|((l, _, g), _)| (l, g)));
            opt.step(&mut model.params, &grads);
        }
        let n = train.len().max(1) as f64;
        let train_loss = loss_sum / n;
        if !train_loss.is_finite() {
            return Err(DetectorError::NonFiniteLoss { epoch });
        }
        let (val_loss, val_accuracy) = evaluate_examples(&model, val)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            train_accuracy: hits as f64 / n,
            val_loss,
            val_accuracy,
        });
        let improved = val.is_empty() || val_accuracy > best_acc;
        if improved {
            best = model.clone();
            best_epoch = epoch;
            best_acc = val_accuracy;
        }
    }
    Ok((
        best,
        TrainingLog {
            initial_val_accuracy,
            epochs,
            best_epoch,
            best_val_accuracy: best_acc,
        },
    ))
}
