use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use klsda::klsda::ColumnScaling;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "klsda",
    version,
    about = "Kullback-Leibler penalized sparse discriminant analysis"
)]
pub struct Cli {
    /// Seed for data generation and fold assignment.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Only log errors.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "KLSDA_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic oddball epoch dataset.
    Synth(SynthArgs),
    /// Per-feature J-divergence map of a dataset.
    Klmap(KlmapArgs),
    /// Fit one configuration on a whole dataset.
    Fit(FitArgs),
    /// Cross-validate configurations.
    Eval(EvalArgs),
    /// Export the nonzero coefficients of a model.
    Betaplot(BetaplotArgs),
    /// Cross-validate every configuration and the FLDA baseline.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub targets: usize,
    #[arg(long, default_value_t = 500)]
    pub nontargets: usize,
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    #[arg(long, default_value_t = 64)]
    pub times: usize,
    /// Sampling rate in Hz.
    #[arg(long, default_value_t = 256.0)]
    pub fs: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Bump center in seconds (default: 0.3 s if it fits, else mid-epoch).
    #[arg(long)]
    pub center: Option<f64>,
    /// Bump standard deviation in seconds.
    #[arg(long)]
    pub width: Option<f64>,
    /// Comma-separated 0-based channels carrying the bump.
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    pub active_channels: Vec<usize>,
    /// Marginal noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// AR(1) coefficient of the noise.
    #[arg(long, default_value_t = 0.5)]
    pub ar: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KlmapArgs {
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Additive per-bin histogram smoothing.
    #[arg(long, default_value_t = 1e-6)]
    pub smoothing: f64,
    /// Also write jmap.svg.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitKnobs {
    /// λ₂ grid as lo:hi:count (log-spaced, endpoints included).
    #[arg(long, default_value = "1e-8:1e-1:8")]
    pub lambda2_grid: String,
    /// Upper bound on the ℓ1 mass of the coefficients.
    #[arg(long)]
    pub t_max: f64,
    /// Number of discriminant directions.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Guard added to J before inversion.
    #[arg(long, default_value_t = 1e-12)]
    pub epsilon: f64,
    /// Column scaling after centering: unit-norm or none.
    #[arg(long, default_value = "unit-norm", value_parser = parse_scaling)]
    pub scaling: ColumnScaling,
    #[arg(long, default_value_t = 30)]
    pub max_outer: usize,
    /// Convergence tolerance on ‖Δβ‖∞.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_steps: usize,
}

fn parse_scaling(s: &str) -> Result<ColumnScaling, String> {
    s.parse().map_err(|e: klsda::klsda::FitError| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// klsda0, klsda1, klsda2, klsda3 or flda.
    #[arg(long)]
    pub config: String,
    #[command(flatten)]
    pub knobs: FitKnobs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated methods.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "klsda0,klsda1,klsda2,klsda3,flda"
    )]
    pub configs: Vec<String>,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    /// Draw folds without class stratification.
    #[arg(long)]
    pub no_stratify: bool,
    #[command(flatten)]
    pub knobs: FitKnobs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BetaplotArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// 1-based direction to export.
    #[arg(long, default_value_t = 1)]
    pub direction: usize,
    /// Also write beta.svg.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    #[arg(long)]
    pub no_stratify: bool,
    #[command(flatten)]
    pub knobs: FitKnobs,
}
