// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use attrgraph_core::io::{list_graph_files, load_dataset, parse_graph};
use attrgraph_core::metrics::{class_signature_report, dataset_signatures};
use attrgraph_core::profile::{class_layer_diff, MassMode};
use attrgraph_core::report::Report;
use attrgraph_core::routing::{class_routing_comparison, LayerAttach, RoutingOptions};
use attrgraph_core::synth::{generate_dataset, GenConfig};
use attrgraph_core::{Error, PageRankOptions, StructuralSignature};

use crate::args::{GenerateArgs, MetricsArgs, PageRankArgs, ProfileArgs, RoutingArgs, ValidateArgs};
use crate::config::Settings;
use crate::error::{CliError, Result};
use crate::{emit, fmt_f64, header};

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn parse_choice<T: std::str::FromStr<Err = String>>(raw: &str) -> Result<T> {
    raw.parse().map_err(CliError::Usage)
}

pub fn validate(a: ValidateArgs, settings: &mut Settings) -> Result<()> {
    let mut files: Vec<PathBuf> = Vec::new();
    for p in &a.paths {
        if p.is_dir() {
            let found = list_graph_files(p)?;
            if found.is_empty() {
                return Err(Error::NoGraphs(p.clone()).into());
            }
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    let mut report = Report::new(header("validate", None, settings)?, &["file", "valid", "violations"]);
    let mut invalid = 0usize;
    for path in &files {
        let problems: Vec<String> = match fs::read_to_string(path) {
            Err(e) => vec![e.to_string()],
            Ok(text) => match parse_graph(&text, path) {
                Err(e) => vec![e.to_string()],
                Ok(g) => g.validate().violations.iter().map(ToString::to_string).collect(),
            },
        };
        for p in &problems {
            eprintln!("{}: {p}", path.display());
        }
        invalid += usize::from(!problems.is_empty());
        report.push_row(vec![path.display().to_string(), problems.is_empty().to_string(), problems.join("; ")]);
    }
    emit(&report, a.out.as_deref())?;
    if invalid > 0 {
        return Err(CliError::Data(format!("{invalid} of {} graphs failed validation", files.len())));
    }
    Ok(())
}

fn pagerank_options(a: &PageRankArgs, settings: &mut Settings) -> Result<PageRankOptions> {
    let d = PageRankOptions::default();
    let damping = settings.value("damping", a.damping, d.damping)?;
    if !(0.0..1.0).contains(&damping) {
        return Err(CliError::Usage(format!("--damping must lie in [0, 1), got {damping}")));
    }
    Ok(PageRankOptions {
        damping,
        weighted: settings.switch("weighted-pagerank", a.weighted_pagerank)?,
        reversed: settings.switch("reverse-pagerank", a.reverse_pagerank)?,
        ..d
    })
}

pub fn metrics(a: MetricsArgs, settings: &mut Settings) -> Result<()> {
    let radar = settings.switch("radar", a.radar)?;
    let opts = pagerank_options(&a.pagerank, settings)?;
    let h = header("metrics", None, settings)?;
    let entries = load_dataset(&a.dir)?;
    let report = if radar {
        let mut r = Report::new(h, &["label", "metric", "mean", "stddev", "normalized"]);
        for row in class_signature_report(&entries, &opts)? {
            r.push_row(vec![
                row.label.as_u8().to_string(),
                row.metric.to_string(),
                fmt_f64(row.mean),
                fmt_f64(row.stddev),
                fmt_f64(row.normalized),
            ]);
        }
        r
    } else {
        let mut columns = vec!["file", "label"];
        columns.extend(StructuralSignature::NAMES);
        let mut r = Report::new(h, &columns);
        let sigs = dataset_signatures(&entries, &opts)?;
        for (e, s) in entries.iter().zip(sigs) {
            let mut row = vec![
                file_name(&e.path),
                e.graph.label.map_or_else(String::new, |l| l.as_u8().to_string()),
                s.dag_l.to_string(),
            ];
            row.extend(s.to_array()[1..].iter().map(|&x| fmt_f64(x)));
            r.push_row(row);
        }
        r
    };
    emit(&report, a.out.as_deref())
}

pub fn profile(a: ProfileArgs, settings: &mut Settings) -> Result<()> {
    let mode: MassMode = parse_choice(&settings.value("mode", a.mode, MassMode::default().to_string())?)?;
    let h = header("profile", None, settings)?;
    let entries = load_dataset(&a.dir)?;
    let mut r = Report::new(h, &["layer", "mean_correct", "mean_wrong", "difference"]);
    for row in class_layer_diff(&entries, mode)? {
        r.push_row(vec![
            row.layer.to_string(),
            fmt_f64(row.mean_correct),
            fmt_f64(row.mean_wrong),
            fmt_f64(row.difference),
        ]);
    }
    emit(&r, a.out.as_deref())
}

pub fn routing(a: RoutingArgs, settings: &mut Settings) -> Result<()> {
    let attach: LayerAttach =
        parse_choice(&settings.value("layer-attach", a.layer_attach, LayerAttach::default().to_string())?)?;
    let opts = RoutingOptions {
        attach,
        magnitude: !settings.switch("signed", a.signed)?,
        normalize: settings.switch("normalize", a.normalize)?,
    };
    let h = header("routing", None, settings)?;
    let entries = load_dataset(&a.dir)?;
    let mut r = Report::new(h, &["layer", "src", "dst", "mean_correct", "mean_wrong", "relative_difference"]);
    for row in class_routing_comparison(&entries, &opts)? {
        r.push_row(vec![
            row.layer.to_string(),
            row.src.to_string(),
            row.dst.to_string(),
            fmt_f64(row.mean_correct),
            fmt_f64(row.mean_wrong),
            fmt_f64(row.relative_difference),
        ]);
    }
    emit(&r, a.out.as_deref())
}

pub fn generate(a: GenerateArgs, settings: &mut Settings) -> Result<()> {
    let n = settings.value("n", a.n, 500usize)?;
    let seed = settings.value("seed", a.seed, 7u64)?;
    let preset = settings.value("preset", a.preset, "default".to_string())?;
    settings.finish()?;
    let cfg = GenConfig::preset(&preset)
        .ok_or_else(|| CliError::Usage(format!("unknown preset `{preset}` (expected default)")))?;
    let written = generate_dataset(n, &GenConfig { seed, ..cfg }, &a.out)?;
    eprintln!("wrote {} graphs to {}", written.len(), a.out.display());
    Ok(())
}
