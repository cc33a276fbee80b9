// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeSet;
use std::fs;
use std::ops::Range;
use std::path::Path;

use attrgraph_core::report::Report;
use attrgraph_intervene::plan::{default_bands, parse_range};
use attrgraph_intervene::toy::{decoded_shift_report, encode, DEMO_CONTEXT, DEMO_QUESTION};
use attrgraph_intervene::{decode_with_control, rag_prompt, InterventionPlan, RegionMap, ToyConfig, ToyTransformer};
use serde::Deserialize;

use crate::args::InterveneArgs;
use crate::config::Settings;
use crate::error::{CliError, Result};
use crate::{emit, fmt_f64, header};

/// Largest tolerated `|row sum - 1|` after renormalization.
const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    prompt: String,
    q: Vec<String>,
    ex: Vec<String>,
}

fn ranges(raw: &[String]) -> Result<Vec<Range<usize>>> {
    raw.iter().map(|s| parse_range(s).map_err(CliError::Usage)).collect()
}

fn prompt_from(text: &str, q: &[String], ex: &[String]) -> Result<(Vec<usize>, RegionMap)> {
    let tokens = encode(text)?;
    let regions = RegionMap::from_ranges(tokens.len(), &ranges(q)?, &ranges(ex)?)?;
    Ok((tokens, regions))
}

fn load_sidecar(path: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn band(raw: Option<String>, default: BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    match raw {
        None => Ok(default),
        Some(s) => Ok(parse_range(&s).map_err(CliError::Usage)?.collect()),
    }
}

fn band_string(b: &BTreeSet<usize>) -> String {
    match (b.first(), b.last()) {
        (Some(lo), Some(hi)) if b.len() == hi - lo + 1 => format!("{lo}:{}", hi + 1),
        _ => b.iter().map(ToString::to_string).collect::<Vec<_>>().join("|"),
    }
}

pub fn intervene(a: InterveneArgs, settings: &mut Settings) -> Result<()> {
    let seed = settings.value("seed", a.seed, 0u64)?;
    let model = ToyTransformer::new(ToyConfig { seed, ..ToyConfig::default() });
    let layers = model.num_layers();
    let d = InterventionPlan::standard(layers);
    let (low_default, high_default) = default_bands(layers);
    let mut plan = InterventionPlan {
        alpha_qq: settings.value("alpha-qq", a.alpha_qq, d.alpha_qq)?,
        alpha_ctx: settings.value("alpha-ctx", a.alpha_ctx, d.alpha_ctx)?,
        alpha_qin: settings.value("alpha-qin", a.alpha_qin, d.alpha_qin)?,
        renormalize: !settings.switch("no-renorm", a.no_renorm)?,
        ..d
    };
    plan.low_layers = band(settings.optional("low", a.low)?, low_default)?;
    plan.high_layers = band(settings.optional("high", a.high)?, high_default)?;
    settings.record("low", band_string(&plan.low_layers));
    settings.record("high", band_string(&plan.high_layers));
    let steps = settings.value("steps", a.steps, 16usize)?;

    let (tokens, regions, source) = if let Some(path) = &a.regions {
        let s = load_sidecar(path)?;
        let (t, r) = prompt_from(&s.prompt, &s.q, &s.ex)?;
        (t, r, "sidecar")
    } else if let Some(text) = &a.prompt {
        if a.q.is_empty() {
            return Err(CliError::Usage("--prompt requires at least one --q range".into()));
        }
        let (t, r) = prompt_from(text, &a.q, &a.ex)?;
        (t, r, "inline")
    } else if !a.q.is_empty() || !a.ex.is_empty() {
        return Err(CliError::Usage("--q/--ex require --prompt".into()));
    } else {
        let (t, r) = rag_prompt(DEMO_CONTEXT, DEMO_QUESTION)?;
        (t, r, "demo")
    };
    settings.record("prompt", source);
    settings.record("prompt_len", tokens.len());
    let mut h = header("intervene", Some(seed), settings)?;
    h.config.remove("seed");

    let plain = decode_with_control(&model, &tokens, &regions, None, steps)?;
    let controlled = decode_with_control(&model, &tokens, &regions, Some(&plan), steps)?;
    if plan.renormalize {
        let worst = controlled.totals().iter().map(|c| c.max_row_error_after).fold(0.0, f64::max);
        if worst > ROW_SUM_TOLERANCE {
            return Err(CliError::Numerical(format!(
                "renormalized attention row deviates from 1 by {worst:e}"
            )));
        }
    }
    eprintln!("uncontrolled: {:?}", plain.text());
    eprintln!("controlled:   {:?}", controlled.text());

    let mut r = Report::new(h, &["layer", "band", "query", "key", "before", "after", "delta"]);
    for row in decoded_shift_report(&controlled) {
        let band = if plan.low_layers.contains(&row.layer) {
            "low"
        } else if plan.high_layers.contains(&row.layer) {
            "high"
        } else {
            "none"
        };
        r.push_row(vec![
            row.layer.to_string(),
            band.to_string(),
            row.query.to_string(),
            row.key.to_string(),
            fmt_f64(row.before),
            fmt_f64(row.after),
            fmt_f64(row.delta),
        ]);
    }
    emit(&r, a.out.as_deref())
}
