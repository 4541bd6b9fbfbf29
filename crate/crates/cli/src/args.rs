use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Coupled non-negative factorization of a CNN's inputs and activations.
///
/// Every subcommand accepts `--config FILE`, a JSON object whose keys are
/// the subcommand's long flag names with `_` in place of `-`. Values given
/// on the command line win over the file, which wins over the defaults.
#[derive(Debug, Parser)]
#[command(name = "factorlens", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the reference CNN for one epoch and report test accuracy.
    Train(TrainArgs),
    /// Capture inputs and post-ReLU activations of test images as a bundle.
    Capture(CaptureArgs),
    /// Fit the coupled factorization of a bundle at one rank.
    Factorize(FactorizeArgs),
    /// Fit a range of ranks and report the best RMSE per rank.
    Sweep(SweepArgs),
    /// Top singular values of every activation matrix.
    Spectra(SpectraArgs),
    /// Neuron × factor participation heatmap of one layer.
    Heatmap(HeatmapArgs),
    /// Latent images: columns of an input factor reshaped to image size.
    Latent(LatentArgs),
    /// Digit label distribution of each latent factor.
    Assoc(AssocArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F64,
    F32,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Directory holding the MNIST IDX files.
    #[arg(long, env = "FACTORLENS_MNIST_DIR")]
    pub mnist_dir: Option<PathBuf>,
    /// Output directory for parameters and train.json.
    #[arg(long, default_value = "model")]
    pub out: PathBuf,
    /// Fraction of the (class-filtered) training set used.
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
    /// Digits kept in the training set.
    #[arg(long, value_delimiter = ',', default_values_t = [0u8, 1, 2, 3, 4, 5, 6, 7, 8, 9])]
    pub classes: Vec<u8>,
    /// Shuffle the training samples; `false` feeds them class by class.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub shuffle: bool,
    /// First class fed when not shuffling; the rest follow in ascending order.
    #[arg(long, default_value_t = 9)]
    pub first_class: u8,
    /// Seeds subset selection, sample order and weight initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// JSON file of option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct CaptureArgs {
    /// Directory written by `train`.
    #[arg(long, default_value = "model")]
    pub model: PathBuf,
    #[arg(long, env = "FACTORLENS_MNIST_DIR")]
    pub mnist_dir: Option<PathBuf>,
    /// Number of leading test images captured.
    #[arg(long, default_value_t = 1000)]
    pub limit: usize,
    #[arg(long, default_value = "bundle")]
    pub out: PathBuf,
    /// JSON file of option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct FactorizeArgs {
    #[arg(long, default_value = "bundle")]
    pub bundle: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub rank: usize,
    /// Seed of the first restart; restart r uses seed + r.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub eps: f64,
    /// Stop once the relative objective decrease falls below this.
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
    #[arg(long, default_value = "factors")]
    pub out: PathBuf,
    /// JSON file of option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Bundle directory; repeat to compare several bundles.
    #[arg(long, default_values_t = [String::from("bundle")])]
    pub bundle: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 20, 30, 40, 50])]
    pub ranks: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    /// Seed of the first restart at every rank.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
    /// Concurrent fits. Results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "sweep")]
    pub out: PathBuf,
    /// JSON file of option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct SpectraArgs {
    #[arg(long, default_values_t = [String::from("bundle")])]
    pub bundle: Vec<String>,
    /// Number of leading singular values per layer.
    #[arg(long, default_value_t = 30)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    /// Tail mass is reported beyond this many leading values.
    #[arg(long, default_value_t = 10)]
    pub tail_index: usize,
    #[arg(long, default_value = "spectra")]
    pub out: PathBuf,
    /// JSON file of option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct HeatmapArgs {
    /// Directory written by `factorize`.
    #[arg(long, default_value = "factors")]
    pub factors: PathBuf,
    /// Activation layer index (0 = first captured layer).
    #[arg(long, default_value_t = 1)]
    pub layer: usize,
    /// A factor column counts as active when some neuron exceeds this.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Pixel size of one heatmap cell in the PGM.
    #[arg(long, default_value_t = 4)]
    pub cell: usize,
    #[arg(long, default_value = "heatmap")]
    pub out: PathBuf,
    /// JSON file of option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct LatentArgs {
    #[arg(long, default_value = "factors")]
    pub factors: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    #[arg(long, default_value_t = 28)]
    pub height: usize,
    #[arg(long, default_value_t = 28)]
    pub width: usize,
    #[arg(long, default_value_t = 4)]
    pub cell: usize,
    #[arg(long, default_value = "latent")]
    pub out: PathBuf,
    /// JSON file of option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct AssocArgs {
    #[arg(long, default_value = "factors")]
    pub factors: PathBuf,
    /// Bundle the factors were fitted on; supplies the labels.
    #[arg(long, default_value = "bundle")]
    pub bundle: PathBuf,
    #[arg(long, default_value = "assoc")]
    pub out: PathBuf,
    /// JSON file of option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}
