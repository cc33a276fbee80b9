// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the console.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use attrgraph_core::io::load_dataset;
use attrgraph_core::metrics::{dag_longest_path, pagerank, triad_census, PageRankOptions, TriadType};
use attrgraph_core::report::parse_report;
use attrgraph_core::routing::{routing_profile, LayerAttach, RouteRegion, RoutingOptions, LOW_LAYER_BAND};
use attrgraph_core::Label;
use attrgraph_intervene::plan::InterventionPlan;
use attrgraph_intervene::toy::{decode_with_control, rag_prompt, ToyConfig, ToyTransformer, DEMO_CONTEXT, DEMO_QUESTION};
use attrgraph_testkit::control::control_violations;
use attrgraph_testkit::gradcheck::{five_graph_batch, perturbed_model, tensor_errors};
use attrgraph_testkit::{oracles, random_dag, rng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn attrgraph(args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_attrgraph"))
        .args(args)
        .env("ATTRGRAPH_THREADS", "1")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!(
            "`attrgraph {}` exited with {:?}: {}",
            args.join(" "),
            o.status.code(),
            String::from_utf8_lossy(&o.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().expect("temp paths are UTF-8")
}

fn metric_oracles() -> Outcome {
    let mut r = rng(7001);
    let (mut census_bad, mut path_bad, mut pr_worst) = (0, 0, 0.0f64);
    for i in 0..200 {
        let n = 1 + i % 30;
        let g = random_dag(&mut r, n, [0.1, 0.2, 0.4][i % 3], 6);
        let got: Vec<(String, u64)> =
            TriadType::ALL.iter().map(|&t| (t.name().to_string(), triad_census(&g).get(t))).collect();
        census_bad += usize::from(got != oracles::triad_census(&g));
        let opts = PageRankOptions::default();
        for (a, b) in pagerank(&g, &opts).unwrap().iter().zip(oracles::pagerank(&g, &opts)) {
            pr_worst = pr_worst.max((a - b).abs());
        }
        let small = random_dag(&mut r, 1 + i % 12, [0.2, 0.5][i % 2], 4);
        path_bad += usize::from(dag_longest_path(&small).unwrap() != oracles::longest_path(&small));
    }
    outcome(
        census_bad == 0 && path_bad == 0 && pr_worst < 1e-8,
        format!("census mismatches {census_bad}/200, path mismatches {path_bad}/200, max PageRank error {pr_worst:.2e}"),
    )
}

fn routing_oracle() -> Outcome {
    let mut r = rng(7002);
    let mut bad = 0;
    for i in 0..100 {
        let g = random_dag(&mut r, 5 + i % 40, 0.25, 8);
        let attach = if i % 2 == 0 { LayerAttach::Dst } else { LayerAttach::Src };
        let opts = RoutingOptions {
            attach,
            ..Default::default()
        };
        let prof = routing_profile(&g, &opts);
        let (cells, residual) = oracles::routing(&g, &opts);
        bad += usize::from(prof.cells != cells || prof.residual != residual);
    }
    outcome(bad == 0, format!("{bad}/100 graphs differ from the edge-by-edge aggregation"))
}

fn gradient_check() -> Outcome {
    let report = tensor_errors(&perturbed_model(3), &five_graph_batch(), 11);
    let (name, worst) = report
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .expect("model has parameters");
    outcome(
        worst < 1e-4,
        format!("max relative error {worst:.2e} ({name}) over {} tensors", report.len()),
    )
}

fn summary_value(report: &str, key: &str) -> Option<f64> {
    let (_, _, rows) = parse_report(report).ok()?;
    rows.iter().find(|r| r[0] == key)?.get(1)?.parse().ok()
}

fn synthetic_separation(dataset: &Path, work: &Path) -> Result<Outcome, String> {
    let ds = p(dataset);
    attrgraph(&["generate", "--n", "500", "--seed", "7", "--out", ds])?;
    attrgraph(&["split", ds, "--out", ds])?;
    let model = work.join("model.bin");
    attrgraph(&["train", ds, "--split", ds, "--out", p(&model), "--seed", "7"])?;
    let summary = attrgraph(&["eval", ds, "--model", p(&model), "--split", ds])?;
    let bal = summary_value(&summary, "balanced_accuracy").ok_or("eval summary lacks balanced_accuracy")?;

    let radar = attrgraph(&["metrics", "--radar", ds])?;
    let (_, _, rows) = parse_report(&radar).map_err(|e| e.to_string())?;
    let mut means: BTreeMap<(String, String), f64> = BTreeMap::new();
    for r in rows {
        means.insert((r[1].clone(), r[0].clone()), r[2].parse().map_err(|_| "bad mean")?);
    }
    let mut failed = Vec::new();
    for (metric, correct_higher) in [
        ("dag_l", true),
        ("avg_deg", true),
        ("density", true),
        ("t_branch", true),
        ("t_disc", false),
        ("max_pr", false),
    ] {
        let c = means[&(metric.to_string(), "1".to_string())];
        let w = means[&(metric.to_string(), "0".to_string())];
        if (c > w) != correct_higher || c == w {
            failed.push(metric);
        }
    }
    Ok(outcome(
        failed.is_empty() && bal >= 0.9,
        format!("balanced test accuracy {bal:.4} (need >= 0.9); metric orderings violated: {failed:?}"),
    ))
}

fn routing_directionality(dataset: &Path) -> Result<Outcome, String> {
    let entries = load_dataset(dataset).map_err(|e| e.to_string())?;
    let opts = RoutingOptions::default();
    let mut sums: BTreeMap<(Label, &str), (f64, usize)> = BTreeMap::new();
    for e in &entries {
        let label = e.graph.label.ok_or("unlabeled synthetic graph")?;
        let prof = routing_profile(&e.graph, &opts);
        for (key, dst) in [("qq", RouteRegion::Q), ("qext", RouteRegion::AnsExt)] {
            let s = sums.entry((label, key)).or_default();
            s.0 += prof.band_share(&LOW_LAYER_BAND, RouteRegion::Q, dst);
            s.1 += 1;
        }
    }
    let mean = |l: Label, k: &str| {
        let (s, n) = sums[&(l, k)];
        s / n as f64
    };
    let qq = mean(Label::Correct, "qq") - mean(Label::Wrong, "qq");
    let qext = mean(Label::Wrong, "qext") - mean(Label::Correct, "qext");
    Ok(outcome(
        qq > 0.0 && qext > 0.0,
        format!("low-layer Q->Q margin (correct - wrong) {qq:.4}, Q->ANS_EXT margin (wrong - correct) {qext:.4}"),
    ))
}

fn intervention_mechanics() -> Result<Outcome, String> {
    let model = ToyTransformer::new(ToyConfig::default());
    let layers = model.num_layers();
    let (tokens, regions) = rag_prompt(DEMO_CONTEXT, DEMO_QUESTION).map_err(|e| e.to_string())?;
    let steps = 16;
    let plain = decode_with_control(&model, &tokens, &regions, None, steps).map_err(|e| e.to_string())?;
    let ident = decode_with_control(&model, &tokens, &regions, Some(&InterventionPlan::identity(layers)), steps)
        .map_err(|e| e.to_string())?;
    let same = plain.generated == ident.generated;
    let plan = InterventionPlan::new(layers, 1.5, 0.5, 1.5);
    let bad = control_violations(&model, &tokens, &regions, &plan, steps).map_err(|e| e.to_string())?;
    Ok(outcome(
        same && bad.is_empty(),
        format!(
            "identity reproduces {steps} tokens: {same}; low layers {:?}, high layers {:?}; violations: {}",
            plan.low_layers,
            plan.high_layers,
            if bad.is_empty() { "none".to_string() } else { bad.join("; ") }
        ),
    ))
}

fn compare_trees(a: &Path, b: &Path) -> Result<Vec<String>, String> {
    let names = |d: &Path| -> Result<Vec<String>, String> {
        let mut v: Vec<String> = fs::read_dir(d)
            .map_err(|e| e.to_string())?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        v.sort();
        Ok(v)
    };
    let (na, nb) = (names(a)?, names(b)?);
    if na != nb {
        return Ok(vec![format!("file lists differ: {} vs {}", na.len(), nb.len())]);
    }
    let mut diff = Vec::new();
    for n in &na {
        if fs::read(a.join(n)).map_err(|e| e.to_string())? != fs::read(b.join(n)).map_err(|e| e.to_string())? {
            diff.push(n.clone());
        }
    }
    Ok(diff)
}

fn determinism(first: &Path, work: &Path) -> Result<Outcome, String> {
    let second = work.join("again");
    attrgraph(&["generate", "--n", "500", "--seed", "7", "--out", p(&second)])?;
    attrgraph(&["split", p(&second), "--out", p(&second)])?;
    let mut differing = compare_trees(first, &second)?;

    let mut reports = Vec::new();
    for (i, dir) in [first, second.as_path()].into_iter().enumerate() {
        let model = work.join(format!("det{i}.bin"));
        let log = work.join(format!("det{i}.log.csv"));
        let ds = p(dir);
        attrgraph(&["train", ds, "--split", ds, "--out", p(&model), "--log", p(&log), "--seed", "11", "--epochs", "3"])?;
        let mut outs = vec![
            fs::read_to_string(&model).map_err(|e| e.to_string())?,
            fs::read_to_string(&log).map_err(|e| e.to_string())?,
        ];
        for args in [
            vec!["metrics", ds],
            vec!["metrics", "--radar", ds],
            vec!["profile", ds, "--mode", "in_attribution"],
            vec!["routing", ds, "--normalize"],
            vec!["eval", ds, "--model", p(&model), "--split", ds],
            vec!["intervene", "--steps", "6"],
        ] {
            outs.push(attrgraph(&args)?);
        }
        reports.push(outs);
    }
    let labels = ["model", "train log", "metrics", "radar", "profile", "routing", "eval", "intervene"];
    for (k, label) in labels.iter().enumerate() {
        if reports[0][k] != reports[1][k] {
            differing.push(label.to_string());
        }
    }
    Ok(outcome(
        differing.is_empty(),
        format!("1000 graphs, 3 index files, model, log and 6 reports compared; differing: {differing:?}"),
    ))
}

fn run(name: &str, budget: Option<Duration>, f: impl FnOnce() -> Result<Outcome, String>) -> bool {
    let start = Instant::now();
    let o = f().unwrap_or_else(|e| outcome(false, e));
    let took = start.elapsed();
    let in_time = budget.map_or(true, |b| took <= b);
    let pass = o.pass && in_time;
    let budget_note = budget.map_or(String::new(), |b| format!(" / budget {:.0}s", b.as_secs_f64()));
    println!(
        "{} {name}: {} [{:.1}s{budget_note}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64()
    );
    pass
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let dataset = work.path().join("synthetic");
    let results = [
        run("metric-oracle equivalence", Some(Duration::from_secs(60)), || Ok(metric_oracles())),
        run("routing-equation equivalence", None, || Ok(routing_oracle())),
        run("detector gradient check", Some(Duration::from_secs(120)), || Ok(gradient_check())),
        run("synthetic separation", Some(Duration::from_secs(600)), || {
            synthetic_separation(&dataset, work.path())
        }),
        run("routing directionality", None, || routing_directionality(&dataset)),
        run("intervention mechanics", Some(Duration::from_secs(30)), intervention_mechanics),
        run("determinism", None, || determinism(&dataset, work.path())),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
