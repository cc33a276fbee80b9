// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "attrgraph",
    version,
    about = "Structural analysis, faithfulness detection and attention control for attribution graphs",
    after_help = "Thread count defaults to the ATTRGRAPH_THREADS environment variable."
)]
pub struct Cli {
    /// Flat TOML or JSON file of flag defaults; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check graph files or directories against the wire-format invariants.
    Validate(ValidateArgs),
    /// Per-graph structural metrics, or the class comparison with --radar.
    Metrics(MetricsArgs),
    /// Per-layer class means of the normalized layer profile.
    Profile(ProfileArgs),
    /// Per-layer region-to-region routing class means.
    Routing(RoutingArgs),
    /// Write a labeled synthetic dataset.
    Generate(GenerateArgs),
    /// Write train/val/test index files for a labeled dataset.
    Split(SplitArgs),
    /// Train the faithfulness detector.
    Train(TrainArgs),
    /// Score a trained detector on labeled graphs.
    Eval(EvalArgs),
    /// Decode on the toy transformer with and without attention control.
    Intervene(InterveneArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Graph files or dataset directories.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PageRankArgs {
    /// Damping factor.
    #[arg(long)]
    pub damping: Option<f64>,
    /// Transition probabilities proportional to |weight|.
    #[arg(long)]
    pub weighted_pagerank: bool,
    /// Run PageRank on the reversed graph.
    #[arg(long)]
    pub reverse_pagerank: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit per-class mean, stddev and normalized mean for each metric.
    #[arg(long)]
    pub radar: bool,
    #[command(flatten)]
    pub pagerank: PageRankArgs,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// node_count or in_attribution.
    #[arg(long)]
    pub mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct RoutingArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rescale each layer's 3x3 cells to sum to one.
    #[arg(long)]
    pub normalize: bool,
    /// Book edge mass to the dst or src layer.
    #[arg(long)]
    pub layer_attach: Option<String>,
    /// Use signed weights instead of magnitudes.
    #[arg(long)]
    pub signed: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Graphs per class.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generator preset.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    pub dir: PathBuf,
    /// Graphs per class in the train/val pool and in the test set.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Directory for train.csv, val.csv and test.csv; defaults to the dataset directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataSelection {
    /// Directory holding index files written by `split`.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Per-class cap when splitting in memory.
    #[arg(long)]
    pub cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub dir: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log report; defaults to `<out>.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataSelection,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Width of the topology embedding; 0 disables it.
    #[arg(long)]
    pub topology_width: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Index directory written by `split`; without it every graph in DIR is scored.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Index part to score: train, val or test.
    #[arg(long)]
    pub part: Option<String>,
    /// Precomputed verdicts (`example_id,verdict` with Yes/No).
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Summary report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-example predictions report.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InterveneArgs {
    #[arg(long)]
    pub alpha_qq: Option<f64>,
    #[arg(long)]
    pub alpha_ctx: Option<f64>,
    #[arg(long)]
    pub alpha_qin: Option<f64>,
    /// Leave scaled attention rows unnormalized.
    #[arg(long)]
    pub no_renorm: bool,
    /// Tokens to generate.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Prompt text; requires --q and --ex.
    #[arg(long)]
    pub prompt: Option<String>,
    /// Question-region character range START:END (repeatable).
    #[arg(long)]
    pub q: Vec<String>,
    /// External-context character range START:END (repeatable).
    #[arg(long)]
    pub ex: Vec<String>,
    /// JSON sidecar with `prompt`, `q` and `ex` fields.
    #[arg(long, conflicts_with_all = ["prompt", "q", "ex"])]
    pub regions: Option<PathBuf>,
    /// Low band as START:END.
    #[arg(long)]
    pub low: Option<String>,
    /// High band as START:END.
    #[arg(long)]
    pub high: Option<String>,
    /// Seed of the toy model weights.
    #[arg(long)]
    pub seed: Option<u64>,
}
