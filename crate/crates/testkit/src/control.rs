// SPDX-License-Identifier: MIT OR Apache-2.0

//! Direct measurements of the attention controls from captured buffers.

use attrgraph_intervene::plan::{InterventionPlan, RegionMap, TokenRegion};
use attrgraph_intervene::toy::{decode_with_control, share, ToyTransformer};
use attrgraph_intervene::Result;

/// Largest tolerated `|row sum - 1|`.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// Runs `plan` and returns every violated control direction as a message.
pub fn control_violations(
    model: &ToyTransformer,
    tokens: &[usize],
    regions: &RegionMap,
    plan: &InterventionPlan,
    steps: usize,
) -> Result<Vec<String>> {
    use TokenRegion::{Ex, In, Q};
    let run = decode_with_control(model, tokens, regions, Some(plan), steps)?;
    let mut bad = Vec::new();
    for (s, step) in run.captures.iter().enumerate() {
        for (l, c) in step.iter().enumerate() {
            if c.max_row_error_before > ROW_TOLERANCE {
                bad.push(format!("step {s} layer {l}: softmax row error {:e}", c.max_row_error_before));
            }
            if plan.renormalize && c.max_row_error_after > ROW_TOLERANCE {
                bad.push(format!("step {s} layer {l}: renormalized row error {:e}", c.max_row_error_after));
            }
        }
    }
    let totals = run.totals();
    let (q, ex, inn) = (Q.index(), Ex.index(), In.index());
    for &l in &plan.low_layers {
        let c = &totals[l];
        if c.scaled[q][q] < c.before[q][q] {
            bad.push(format!("layer {l}: scaled Q->Q mass fell"));
        }
        if share(&c.after, Q, Q) < share(&c.before, Q, Q) {
            bad.push(format!("layer {l}: Q->Q share fell"));
        }
        for x in TokenRegion::ALL {
            if c.scaled[x.index()][ex] > c.before[x.index()][ex] {
                bad.push(format!("layer {l}: scaled {x}->Ex mass rose"));
            }
            if share(&c.after, x, Ex) > share(&c.before, x, Ex) {
                bad.push(format!("layer {l}: {x}->Ex share rose"));
            }
        }
    }
    for &l in &plan.high_layers {
        let c = &totals[l];
        if c.before[inn][q] <= 0.0 {
            bad.push(format!("layer {l}: no In->Q attention to control"));
        }
        if share(&c.after, In, Q) < share(&c.before, In, Q) {
            bad.push(format!("layer {l}: In->Q share fell"));
        }
    }
    Ok(bad)
}
