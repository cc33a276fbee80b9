// SPDX-License-Identifier: MIT OR Apache-2.0

//! Test-set evaluation and comparison with externally computed verdicts.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use attrgraph_core::Label;

use crate::error::{DetectorError, Result};
use crate::model::{predict_label, DetectorModel};
use crate::train::{predict_all, Example};

/// Confusion counts with label 1 (faithful) as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_neg: usize,
    pub false_pos: usize,
    pub true_neg: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = Confusion::default();
        for (truth, pred) in pairs {
            match (truth, pred) {
                (Label::Correct, Label::Correct) => c.true_pos += 1,
                (Label::Correct, Label::Wrong) => c.false_neg += 1,
                (Label::Wrong, Label::Correct) => c.false_pos += 1,
                (Label::Wrong, Label::Wrong) => c.true_neg += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.true_pos + self.false_neg + self.false_pos + self.true_neg
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_pos + self.true_neg) as f64 / self.total() as f64
    }

    /// Recall on label-1 graphs (`NaN` if there are none).
    pub fn accuracy_correct(&self) -> f64 {
        self.true_pos as f64 / (self.true_pos + self.false_neg) as f64
    }

    /// Recall on label-0 graphs (`NaN` if there are none).
    pub fn accuracy_wrong(&self) -> f64 {
        self.true_neg as f64 / (self.true_neg + self.false_pos) as f64
    }

    pub fn balanced_accuracy(&self) -> f64 {
        0.5 * (self.accuracy_correct() + self.accuracy_wrong())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub label: Label,
    pub p_correct: f64,
    pub predicted: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub predictions: Vec<Prediction>,
    pub confusion: Confusion,
    pub baseline: Option<Confusion>,
}

impl Evaluation {
    /// `(metric, value)` rows for the summary report.
    pub fn summary_rows(&self) -> Vec<(String, String)> {
        let mut rows = Vec::new();
        let mut push = |k: &str, v: String| rows.push((k.to_string(), v));
        let c = &self.confusion;
        push("n", c.total().to_string());
        push("accuracy", c.accuracy().to_string());
        push("balanced_accuracy", c.balanced_accuracy().to_string());
        push("accuracy_correct", c.accuracy_correct().to_string());
        push("accuracy_wrong", c.accuracy_wrong().to_string());
        push("true_pos", c.true_pos.to_string());
        push("false_neg", c.false_neg.to_string());
        push("false_pos", c.false_pos.to_string());
        push("true_neg", c.true_neg.to_string());
        if let Some(b) = &self.baseline {
            push("baseline_accuracy", b.accuracy().to_string());
            push("baseline_balanced_accuracy", b.balanced_accuracy().to_string());
            push("accuracy_gain", (c.accuracy() - b.accuracy()).to_string());
        }
        rows
    }
}

/// Verdicts keyed by example id; `Yes` maps to label 1.
pub fn read_baseline(path: impl AsRef<Path>) -> Result<HashMap<String, Label>> {
    let path = path.as_ref();
    let bad = |message: String| DetectorError::Baseline {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| DetectorError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["example_id", "verdict"] {
        return Err(bad("expected header `example_id,verdict`".into()));
    }
    let mut out = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let verdict = match rec.get(1).map(str::trim) {
            Some("Yes") => Label::Correct,
            Some("No") => Label::Wrong,
            other => return Err(bad(format!("row {}: verdict must be Yes or No, got {:?}", i + 2, other.unwrap_or("")))),
        };
        let id = rec.get(0).unwrap_or("").trim().to_string();
        if out.insert(id.clone(), verdict).is_some() {
            return Err(bad(format!("duplicate example id `{id}`")));
        }
    }
    Ok(out)
}

/// Scores `examples`, optionally against baseline verdicts that must cover every example.
pub fn evaluate(
    model: &DetectorModel,
    examples: &[Example],
    baseline: Option<&HashMap<String, Label>>,
) -> Result<Evaluation> {
    let probs = predict_all(model, examples)?;
    let predictions: Vec<Prediction> = examples
        .iter()
        .zip(probs)
        .map(|(e, p)| Prediction {
            id: e.id.clone(),
            label: e.label,
            p_correct: p,
            predicted: predict_label(p),
        })
        .collect();
    let confusion = Confusion::from_pairs(predictions.iter().map(|p| (p.label, p.predicted)));
    let baseline = match baseline {
        None => None,
        Some(verdicts) => {
            let missing: Vec<&str> =
                examples.iter().filter(|e| !verdicts.contains_key(&e.id)).map(|e| e.id.as_str()).collect();
            if !missing.is_empty() {
                return Err(DetectorError::Baseline {
                    path: "<verdicts>".into(),
                    message: format!("no verdict for example ids: {}", missing.join(", ")),
                });
            }
            Some(Confusion::from_pairs(examples.iter().map(|e| (e.label, verdicts[&e.id]))))
        }
    };
    Ok(Evaluation {
        predictions,
        confusion,
        baseline,
    })
}
