use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::router::ContextAblation;

#[derive(Debug, Parser)]
#[command(
    name = "georouter",
    version,
    about = "Route geolocalization queries between retrieval and generation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label raw prediction dumps and write a dataset with targets
    Build(BuildArgs),
    /// Generate a seeded synthetic dataset
    Synth(SynthArgs),
    /// Train a routing model
    Train(TrainArgs),
    /// Score and route every record of a dataset
    Route(RouteArgs),
    /// Evaluate policies on a labeled dataset
    Eval(EvalArgs),
    /// Retrain and evaluate over a grid of alphas or data fractions
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file with default values; flags given on the command line win
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice made by the command
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Steepness of the soft label
    #[arg(long, default_value_t = crate::dispo::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Added to both errors before taking logs
    #[arg(long, default_value_t = crate::dispo::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub common: Common,
    /// Raw prediction JSONL
    #[arg(long, short)]
    pub input: PathBuf,
    /// Labeled dataset JSONL to write
    #[arg(long, short)]
    pub output: PathBuf,
    #[command(flatten)]
    pub label: LabelArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Number of records
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Embedding dimension
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.9)]
    pub signal_strength: f64,
    /// Log-normal scale of retrieval errors, km
    #[arg(long, default_value_t = 20.0)]
    pub retrieval_error_scale: f64,
    /// Log-normal scale of generation errors, km
    #[arg(long, default_value_t = 200.0)]
    pub generation_error_scale: f64,
    /// Standard deviation of log-errors
    #[arg(long, default_value_t = 1.0)]
    pub error_spread: f64,
    /// Candidates per record, top-1 included
    #[arg(long, default_value_t = 10)]
    pub candidates: usize,
    #[arg(long, default_value_t = 0.0)]
    pub near_tie_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KindArg {
    Linear,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EncoderArg {
    /// `concat` when the dataset has embeddings, `context` otherwise
    Auto,
    Embedding,
    Context,
    Concat,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Linear)]
    pub kind: KindArg,
    /// Hidden width of the MLP
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    #[arg(long, value_enum, default_value_t = EncoderArg::Auto)]
    pub encoder: EncoderArg,
    /// Context removed from the features
    #[arg(long, value_enum, default_value_t = ContextAblation::Full)]
    pub ablation: ContextAblation,
}

#[derive(Debug, Args)]
pub struct OptimArgs {
    #[arg(long, default_value_t = 1e-4)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 24)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 3)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub weight_decay: f64,
    /// Share of the training data to use, drawn once per run
    #[arg(long, default_value_t = 1.0)]
    pub data_fraction: f64,
    /// Fit binary labels instead of soft labels
    #[arg(long)]
    pub hard_labels: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Labeled dataset JSONL
    #[arg(long, short)]
    pub data: PathBuf,
    /// Model file to write
    #[arg(long, short)]
    pub model: PathBuf,
    #[command(flatten)]
    pub label: LabelArgs,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, short)]
    pub data: PathBuf,
    #[arg(long, short)]
    pub model: PathBuf,
    /// JSONL with one routing decision per record
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PolicyArg {
    Retrieval,
    Generation,
    Router,
    Oracle,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, short)]
    pub data: PathBuf,
    /// Required for the router policy
    #[arg(long, short)]
    pub model: Option<PathBuf>,
    /// Policies to evaluate [default: all, router only with --model]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub policies: Vec<PolicyArg>,
    #[arg(long, value_delimiter = ',', default_value = "1,25,200,750,2500")]
    pub thresholds: Vec<f64>,
    /// Also write the report as JSON
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, short)]
    pub data: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.4,0.7,1.0,1.3,1.6,1.9,2.2,2.5,3.0"
    )]
    pub alphas: Vec<f64>,
    /// Sweep the training data fraction instead of alpha
    #[arg(long, value_delimiter = ',')]
    pub fractions: Vec<f64>,
    /// Share of records held out for evaluation
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,25,200,750,2500")]
    pub thresholds: Vec<f64>,
    #[command(flatten)]
    pub label: LabelArgs,
    #[command(flatten)]
    pub model_args: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
    /// Router accuracy per value and threshold as CSV
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Full per-value reports as JSON
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use clap::Parser;

    use super::*;

    #[test]
    fn list_defaults_match_library_constants() {
        let Command::Sweep(a) = Cli::parse_from(["georouter", "sweep", "-d", "x"]).command else {
            panic!("expected sweep");
        };
        assert_eq!(a.thresholds, crate::geo::DEFAULT_THRESHOLDS_KM);
        assert_eq!(a.alphas, crate::eval::DEFAULT_ALPHA_GRID);
        assert_eq!(a.label.alpha, crate::dispo::DEFAULT_ALPHA);
        let t = crate::router::TrainConfig::default();
        assert_eq!(a.optim.learning_rate, t.learning_rate);
        assert_eq!(a.optim.batch_size, t.batch_size);
        assert_eq!(a.optim.epochs, t.epochs);
        assert_eq!(a.optim.weight_decay, t.weight_decay);
    }

    #[test]
    fn synth_defaults_match_library() {
        let Command::Synth(a) = Cli::parse_from(["georouter", "synth", "-o", "x"]).command else {
            panic!("expected synth");
        };
        let d = crate::data::SynthConfig::default();
        assert_eq!(
            (
                a.n,
                a.dim,
                a.signal_strength,
                a.retrieval_error_scale,
                a.generation_error_scale
            ),
            (
                d.n,
                d.dim,
                d.signal_strength,
                d.retrieval_error_scale,
                d.generation_error_scale
            )
        );
        assert_eq!(
            (a.error_spread, a.candidates, a.near_tie_fraction),
            (d.error_spread, d.candidates, d.near_tie_fraction)
        );
    }
}
