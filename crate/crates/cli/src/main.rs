mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plfp_core::{CriterionKind, LossKind};

#[derive(Debug, Parser)]
#[command(
    name = "plfp",
    version,
    about = "Filter pruning by local filter geometry"
)]
struct Cli {
    /// Seed for model initialisation, batch sampling and random baselines.
    #[arg(long, global = true, env = "PLFP_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select filters to prune and write a plan file.
    Plan(PlanArgs),
    /// Prune an archive, progressively or from a plan, and write the slim archive.
    Prune(PruneArgs),
    /// Train the reference network (or continue an archive) on a dataset.
    Train(TrainArgs),
    /// Per-layer sensitivity: mAP after pruning one layer at each rate.
    Sweep(SweepArgs),
    /// Retrieval metrics and cost reduction of an archive.
    Evaluate(EvaluateArgs),
    /// Run several criteria under one budget and print a comparison table.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Criterion {
    Local,
    L1,
    Median,
    Center,
    Random,
}

impl From<Criterion> for CriterionKind {
    fn from(c: Criterion) -> Self {
        match c {
            Criterion::Local => CriterionKind::LocalGeometry,
            Criterion::L1 => CriterionKind::L1Norm,
            Criterion::Median => CriterionKind::GeometricMedian,
            Criterion::Center => CriterionKind::CenterDistance,
            Criterion::Random => CriterionKind::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Loss {
    Triplet,
    Contrastive,
}

impl From<Loss> for LossKind {
    fn from(l: Loss) -> Self {
        match l {
            Loss::Triplet => LossKind::Triplet,
            Loss::Contrastive => LossKind::Contrastive,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[arg(long, value_enum, default_value = "local")]
    criterion: Criterion,
    /// Prune rate in [0, 1) applied to every selected layer.
    #[arg(long, default_value_t = 0.5)]
    rate: f64,
    /// Neighbour count of the local-geometry criterion.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Layer index to prune (repeatable); all prunable conv layers when omitted.
    #[arg(long = "layer")]
    layers: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainOpts {
    #[arg(long, default_value_t = 0.02)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 0.5)]
    margin: f64,
    #[arg(long, value_enum, default_value = "triplet")]
    loss: Loss,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    archive: PathBuf,
    #[command(flatten)]
    select: SelectArgs,
    /// Plan file to write (TOML).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[arg(long)]
    archive: PathBuf,
    /// Apply this plan instead of running the decay schedule.
    #[arg(long, conflicts_with_all = ["gamma", "epochs", "data"])]
    plan: Option<PathBuf>,
    #[command(flatten)]
    select: SelectArgs,
    /// Decay factor per re-selection; defaults to 0.01 for rates up to 0.5, else 0.3.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Dataset file used for fine-tuning.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    train: TrainOpts,
    /// Relative norm below which a selected filter counts as zero.
    #[arg(long, default_value_t = plfp_core::scheduler::DEFAULT_ZERO_THRESHOLD)]
    zero_threshold: f64,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch trace (one JSON record per line).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Where to write the final selection as a plan file.
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Continue training this archive instead of a fresh reference network.
    #[arg(long)]
    archive: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[command(flatten)]
    train: TrainOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    archive: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Layer to sweep (repeatable); all prunable conv layers when omitted.
    #[arg(long = "layer")]
    layers: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8")]
    rates: Vec<f64>,
    #[arg(long, value_enum, default_value = "local")]
    criterion: Criterion,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Fine-tuning epochs after each one-shot prune.
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[command(flatten)]
    train: TrainOpts,
    /// Output file for the curve records; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    archive: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Unpruned archive to measure FLOPs and parameter reduction against.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    data: PathBuf,
    /// Starting model; a reference network is pretrained per seed when omitted.
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Pruning arm `criterion:method` with method `progressive` or `oneshot` (repeatable).
    #[arg(long = "arm", default_values = ["local:progressive", "l1:oneshot"])]
    arms: Vec<String>,
    #[arg(long, default_value_t = 0.9)]
    rate: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    gamma: Option<f64>,
    /// Epoch budget shared by every arm.
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 30)]
    pretrain_epochs: usize,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[command(flatten)]
    train: TrainOpts,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match commands::run(cli.command, cli.seed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<commands::UsageError>() { 1 } else { 2 })
        }
    }
}
