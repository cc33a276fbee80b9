// SPDX-License-Identifier: MIT OR Apache-2.0

//! Central finite-difference check of detector gradients.

use attrgraph_core::synth::{generate, GenConfig};
use attrgraph_core::Label;
use attrgraph_detector::model::{DetectorModel, ModelConfig};
use attrgraph_detector::train::{batch_loss, batch_loss_and_grad};
use attrgraph_detector::{build_features, Example};
use rand::seq::index::sample;
use rand::Rng;

use crate::graphs::rng;

pub const STEP: f64 = 1e-4;
/// Denominator floor for the relative error.
pub const FLOOR: f64 = 1e-6;
/// Entries probed per tensor, plus the entry with the largest analytic gradient.
pub const PER_TENSOR: usize = 24;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

/// Five labeled synthetic graphs of alternating class.
pub fn five_graph_batch() -> Vec<Example> {
    (0..5)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Correct } else { Label::Wrong };
            let cfg = GenConfig { seed: 1000 + i as u64, ..GenConfig::standard() };
            let g = generate(label, &cfg).expect("standard preset is feasible");
            Example {
                id: i.to_string(),
                features: build_features(&g).expect("generated graphs are non-empty"),
                label,
            }
        })
        .collect()
}

/// A default-shaped model moved off its initialization, with a non-trivial standardizer.
pub fn perturbed_model(seed: u64) -> DetectorModel {
    let mut model = DetectorModel::new(ModelConfig::default(), seed, false);
    let mut r = rng(seed + 1);
    for p in &mut model.params {
        p.mapv_inplace(|x| x + r.gen_range(-0.05..0.05));
    }
    model.topology_mean = [5.0, 3.0, 0.03, 0.8, 0.01, 0.15];
    model.topology_std = [3.0, 2.0, 0.02, 0.1, 0.005, 0.05];
    model
}

/// Worst relative error per parameter tensor, in layout order.
pub fn tensor_errors(model: &DetectorModel, examples: &[Example], seed: u64) -> Vec<(String, f64)> {
    let batch: Vec<_> = examples.iter().map(|e| (&e.features, e.label)).collect();
    let (_, grads) = batch_loss_and_grad(model, &batch).expect("batch is well-formed");
    let mut r = rng(seed);
    let mut out = Vec::new();
    for (t, spec) in model.layout().iter().enumerate() {
        let len = model.params[t].len();
        let mut idx: Vec<usize> = if len <= PER_TENSOR {
            (0..len).collect()
        } else {
            sample(&mut r, len, PER_TENSOR).into_vec()
        };
        let largest = grads[t]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .expect("tensors are non-empty");
        idx.push(largest);
        let mut worst: f64 = 0.0;
        for i in idx {
            let mut m = model.clone();
            let orig = m.params[t].as_slice().expect("contiguous")[i];
            m.params[t].as_slice_mut().expect("contiguous")[i] = orig + STEP;
            let up = batch_loss(&m, &batch).expect("batch is well-formed");
            m.params[t].as_slice_mut().expect("contiguous")[i] = orig - STEP;
            let down = batch_loss(&m, &batch).expect("batch is well-formed");
            let numeric = (up - down) / (2.0 * STEP);
            worst = worst.max(rel_err(grads[t].as_slice().expect("contiguous")[i], numeric));
        }
        out.push((spec.name.clone(), worst));
    }
    out
}
