// SPDX-License-Identifier: MIT OR Apache-2.0

//! Region-aware scaling of attention rows.
//!
//! Factors are looked up by the region of the *query* token (the position
//! whose update is being computed) and the region of the *key* token (the
//! attended-to position that supplies information):
//!
//! | control | layers | query | key | factor |
//! |---------|--------|-------|-----|--------|
//! | question consolidation | low | Q | Q | `alpha_qq` |
//! | context suppression | low | any | Ex | `alpha_ctx` |
//! | question-guided decoding | high | In | Q | `alpha_qin` |
//!
//! The third row routes information from question keys into generated
//! queries; a question query can never see a generated key under causal
//! masking.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{InterventionError, Result};

/// Region of a token position during decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenRegion {
    /// Question token.
    Q,
    /// Retrieved external context.
    Ex,
    /// Generated by the model.
    In,
}

impl TokenRegion {
    pub const ALL: [TokenRegion; 3] = [TokenRegion::Q, TokenRegion::Ex, TokenRegion::In];

    pub fn index(self) -> usize {
        match self {
            TokenRegion::Q => 0,
            TokenRegion::Ex => 1,
            TokenRegion::In => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TokenRegion::Q => "Q",
            TokenRegion::Ex => "Ex",
            TokenRegion::In => "In",
        }
    }
}

impl fmt::Display for TokenRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Regions of every position; generated positions are appended as `In`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    regions: Vec<TokenRegion>,
    prompt_len: usize,
}

impl RegionMap {
    /// Prompt regions from explicit `Q` and `Ex` ranges that must tile `0..prompt_len`.
    pub fn from_ranges(prompt_len: usize, q: &[Range<usize>], ex: &[Range<usize>]) -> Result<Self> {
        let mut regions: Vec<Option<TokenRegion>> = vec![None; prompt_len];
        for (region, ranges) in [(TokenRegion::Q, q), (TokenRegion::Ex, ex)] {
            for r in ranges {
                if r.start >= r.end || r.end > prompt_len {
                    return Err(InterventionError::Regions(format!(
                        "range {}:{} is empty or outside the prompt of length {prompt_len}",
                        r.start, r.end
                    )));
                }
                for slot in &mut regions[r.clone()] {
                    if slot.replace(region).is_some() {
                        return Err(InterventionError::Regions(format!("ranges overlap inside {}:{}", r.start, r.end)));
                    }
                }
            }
        }
        if let Some(pos) = regions.iter().position(Option::is_none) {
            return Err(InterventionError::Regions(format!("prompt position {pos} has no region")));
        }
        Self::from_prompt(regions.into_iter().map(Option::unwrap).collect())
    }

    /// Prompt regions given per position; `In` is not allowed in a prompt.
    pub fn from_prompt(regions: Vec<TokenRegion>) -> Result<Self> {
        if regions.is_empty() {
            return Err(InterventionError::EmptyPrompt);
        }
        if let Some(pos) = regions.iter().position(|r| *r == TokenRegion::In) {
            return Err(InterventionError::Regions(format!("prompt position {pos} cannot be In")));
        }
        let prompt_len = regions.len();
        Ok(RegionMap { regions, prompt_len })
    }

    pub fn push_generated(&mut self) {
        self.regions.push(TokenRegion::In);
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn prompt_len(&self) -> usize {
        self.prompt_len
    }

    pub fn get(&self, pos: usize) -> TokenRegion {
        self.regions[pos]
    }

    pub fn as_slice(&self) -> &[TokenRegion] {
        &self.regions
    }
}

/// Parses `a:b` as the half-open range `a..b`.
pub fn parse_range(s: &str) -> Result<Range<usize>, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected START:END, got `{s}`"))?;
    let start = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
    let end = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
    Ok(start..end)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionPlan {
    pub alpha_qq: f64,
    pub alpha_ctx: f64,
    pub alpha_qin: f64,
    pub low_layers: BTreeSet<usize>,
    pub high_layers: BTreeSet<usize>,
    /// Divide each modified row by its new sum.
    pub renormalize: bool,
}

/// Default bands for a model of depth `num_layers`: low `0..=L/4`, high the top half.
pub fn default_bands(num_layers: usize) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let low = (0..=num_layers / 4).filter(|&l| l < num_layers).collect();
    let high = (num_layers / 2..num_layers).collect();
    (low, high)
}

impl InterventionPlan {
    pub fn new(num_layers: usize, alpha_qq: f64, alpha_ctx: f64, alpha_qin: f64) -> Self {
        let (low_layers, high_layers) = default_bands(num_layers);
        InterventionPlan {
            alpha_qq,
            alpha_ctx,
            alpha_qin,
            low_layers,
            high_layers,
            renormalize: true,
        }
    }

    /// `(1.5, 0.5, 1.5)` on the default bands.
    pub fn standard(num_layers: usize) -> Self {
        Self::new(num_layers, 1.5, 0.5, 1.5)
    }

    /// All factors one.
    pub fn identity(num_layers: usize) -> Self {
        Self::new(num_layers, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self, num_layers: usize) -> Result<()> {
        for (name, a) in [("alpha_qq", self.alpha_qq), ("alpha_ctx", self.alpha_ctx), ("alpha_qin", self.alpha_qin)] {
            if !(a.is_finite() && a > 0.0) {
                return Err(InterventionError::Config(format!("{name} must be a positive finite number, got {a}")));
            }
        }
        if let Some(l) = self.low_layers.intersection(&self.high_layers).next() {
            return Err(InterventionError::Config(format!("layer {l} is in both the low and the high band")));
        }
        if let Some(l) = self.low_layers.iter().chain(&self.high_layers).find(|&&l| l >= num_layers) {
            return Err(InterventionError::Config(format!("layer {l} is outside 0..{num_layers}")));
        }
        Ok(())
    }

    /// Product of every control that applies to `(layer, query, key)`.
    pub fn scaling_factor(&self, layer: usize, query: TokenRegion, key: TokenRegion) -> f64 {
        use TokenRegion::*;
        let mut f = 1.0;
        if self.low_layers.contains(&layer) {
            if query == Q && key == Q {
                f *= self.alpha_qq;
            }
            if key == Ex {
                f *= self.alpha_ctx;
            }
        }
        if self.high_layers.contains(&layer) && query == In && key == Q {
            f *= self.alpha_qin;
        }
        f
    }

    /// Whether any factor at `layer` differs from one.
    pub fn touches_layer(&self, layer: usize) -> bool {
        TokenRegion::ALL
            .iter()
            .any(|&q| TokenRegion::ALL.iter().any(|&k| self.scaling_factor(layer, q, k) != 1.0))
    }
}

/// Result of hooking one attention row.
#[derive(Debug, Clone, PartialEq)]
pub struct HookedRow {
    /// Row after scaling, before renormalization.
    pub scaled: Vec<f64>,
    /// Row handed on to value aggregation.
    pub output: Vec<f64>,
}

/// Rescales one causal attention row of the query at `query_pos`.
///
/// `row[j]` is the weight on key position `j`; `row.len()` must not exceed
/// `query_pos + 1`. A row whose factors are all one is returned unchanged.
pub fn apply_hook(
    row: &[f64],
    regions: &RegionMap,
    plan: &InterventionPlan,
    layer: usize,
    query_pos: usize,
) -> Result<HookedRow> {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(InterventionError::UnnormalizedRow(sum));
    }
    let query = regions.get(query_pos);
    let factors: Vec<f64> = (0..row.len()).map(|k| plan.scaling_factor(layer, query, regions.get(k))).collect();
    if factors.iter().all(|&f| f == 1.0) {
        return Ok(HookedRow {
            scaled: row.to_vec(),
            output: row.to_vec(),
        });
    }
    let scaled: Vec<f64> = row.iter().zip(&factors).map(|(a, f)| a * f).collect();
    let total: f64 = scaled.iter().sum();
    if total <= 0.0 {
        return Err(InterventionError::DegenerateRow);
    }
    let output = if plan.renormalize {
        scaled.iter().map(|a| a / total).collect()
    } else {
        scaled.clone()
    };
    Ok(HookedRow { scaled, output })
}

impl FromStr for TokenRegion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Q" => Ok(TokenRegion::Q),
            "Ex" => Ok(TokenRegion::Ex),
            "In" => Ok(TokenRegion::In),
            other => Err(format!("unknown region `{other}` (expected Q, Ex or In)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenRegion::*;

    #[test]
    fn standard_factors() {
        let p = InterventionPlan::standard(8);
        assert_eq!(p.scaling_factor(0, Q, Q), 1.5);
        assert_eq!(p.scaling_factor(0, In, Ex), 0.5);
        assert_eq!(p.scaling_factor(0, Q, Ex), 0.5);
        assert_eq!(p.scaling_factor(5, In, Q), 1.5);
        assert_eq!(p.scaling_factor(5, Q, Q), 1.0);
    }

    #[test]
    fn unbanded_layer_is_neutral() {
        let p = InterventionPlan::standard(8);
        assert_eq!(default_bands(8), ([0, 1, 2].into(), [4, 5, 6, 7].into()));
        for q in TokenRegion::ALL {
            for k in TokenRegion::ALL {
                assert_eq!(p.scaling_factor(3, q, k), 1.0);
            }
        }
        assert!(!p.touches_layer(3));
    }

    #[test]
    fn overlapping_bands_are_rejected() {
        let mut p = InterventionPlan::standard(8);
        p.high_layers.insert(2);
        assert!(matches!(p.validate(8), Err(InterventionError::Config(_))));
        let mut p = InterventionPlan::standard(8);
        p.high_layers.insert(9);
        assert!(p.validate(8).is_err());
        assert!(InterventionPlan::new(8, 0.0, 1.0, 1.0).validate(8).is_err());
    }

    fn two_key_map() -> RegionMap {
        RegionMap::from_ranges(3, &[0..1, 2..3], &[1..2]).unwrap()
    }

    #[test]
    fn hand_computed_rows() {
        let map = two_key_map();
        let p = InterventionPlan::standard(8);
        // query at position 2 (Q) sees keys 0 (Q) and 1 (Ex); the row covers keys 0 and 1 only
        let h = apply_hook(&[0.5, 0.5], &map, &p, 0, 2).unwrap();
        assert_eq!(h.output, vec![0.75, 0.25]);
        let h = apply_hook(&[0.4, 0.6], &map, &p, 0, 2).unwrap();
        assert!((h.scaled[0] - 0.6).abs() < 1e-15 && (h.scaled[1] - 0.3).abs() < 1e-15);
        assert!((h.output[0] - 2.0 / 3.0).abs() < 1e-15 && (h.output[1] - 1.0 / 3.0).abs() < 1e-15);
        let raw = InterventionPlan {
            renormalize: false,
            ..p
        };
        let h = apply_hook(&[0.4, 0.6], &map, &raw, 0, 2).unwrap();
        assert_eq!(h.output, h.scaled);
    }

    #[test]
    fn identity_returns_input() {
        let map = two_key_map();
        let row = [0.1, 0.2, 0.7];
        let h = apply_hook(&row, &map, &InterventionPlan::identity(8), 0, 2).unwrap();
        assert_eq!(h.output, row);
    }

    #[test]
    fn degenerate_and_unnormalized_rows() {
        let map = RegionMap::from_prompt(vec![Ex, Ex]).unwrap();
        let p = InterventionPlan {
            alpha_ctx: 5e-324,
            ..InterventionPlan::standard(8)
        };
        // half of the smallest subnormal rounds to zero
        let err = apply_hook(&[0.5, 0.5], &map, &p, 0, 1).unwrap_err();
        assert_eq!(err.to_string(), "degenerate attention row");
        assert!(matches!(apply_hook(&[0.3, 0.3], &map, &p, 0, 1), Err(InterventionError::UnnormalizedRow(_))));
    }

    #[test]
    fn region_map_validation() {
        assert!(RegionMap::from_ranges(4, &[0..2], &[2..3]).is_err());
        assert!(RegionMap::from_ranges(4, &[0..2], &[1..4]).is_err());
        assert!(RegionMap::from_ranges(4, &[0..5], &[]).is_err());
        let mut m = RegionMap::from_ranges(4, &[0..2], &[2..4]).unwrap();
        m.push_generated();
        assert_eq!(m.as_slice(), &[Q, Q, Ex, Ex, In]);
        assert_eq!(parse_range("3:7").unwrap(), 3..7);
        assert!(parse_range("3-7").is_err());
    }
}
