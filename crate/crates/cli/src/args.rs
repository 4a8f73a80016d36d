use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "dance",
    version,
    about = "Kaleidoscope images of protein sequences, and a pipeline to classify them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render one image per sequence plus a manifest.
    Render(RenderArgs),
    /// Write the line segments of one sequence as text.
    Segments(SegmentsArgs),
    /// Generate a motif-planted synthetic dataset.
    Synth(SynthArgs),
    /// Assign manifest entries to train and test.
    Split(SplitArgs),
    /// Build a feature matrix from a manifest or FASTA file.
    Featurize(FeaturizeArgs),
    /// Fit a classifier to a feature matrix.
    Train(TrainArgs),
    /// Predict class probabilities for a feature matrix.
    Predict(PredictArgs),
    /// Score predictions and print the results table.
    Eval(EvalArgs),
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct Geometry {
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub scale: Option<f64>,
    /// Step direction in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub angle: Option<f64>,
    /// Start position as `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub pos: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Dance,
    Cgr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Pgm => "pgm",
            Self::Png => "png",
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub fasta: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// CSV with `id,label` columns.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Dance)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = ImageFormat::Pgm)]
    pub format: ImageFormat,
    /// Image size as `WxH`.
    #[arg(long)]
    pub size: Option<String>,
    /// Gray level of the lines (0 = black).
    #[arg(long)]
    pub ink: Option<u8>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub geometry: Geometry,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SegmentsArgs {
    /// Residues to draw.
    #[arg(long, conflicts_with = "fasta", required_unless_present = "fasta")]
    pub seq: Option<String>,
    /// FASTA file; its first record is used.
    #[arg(long)]
    pub fasta: Option<PathBuf>,
    /// Output file; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: Geometry,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for sequences.fasta and labels.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    #[arg(long, default_value_t = 12)]
    pub min_len: usize,
    #[arg(long, default_value_t = 18)]
    pub max_len: usize,
    #[arg(long, default_value_t = 4)]
    pub motif: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the split manifest; defaults to rewriting the input.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Shuffle the whole dataset instead of each class.
    #[arg(long)]
    pub unstratified: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Ohe,
    Pixels,
    Fcgr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Manifest from `render`, optionally split.
    #[arg(long, required_unless_present = "fasta")]
    pub manifest: Option<PathBuf>,
    /// Sequences for one-hot and FCGR features.
    #[arg(long)]
    pub fasta: Option<PathBuf>,
    /// Labels when no manifest is given.
    #[arg(long, conflicts_with = "manifest")]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum, default_value_t = SplitChoice::All)]
    pub split: SplitChoice,
    /// Output file; `.csv` selects CSV, anything else the binary format.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub downsample: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Knn,
    Logreg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricChoice {
    Euclidean,
    Manhattan,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub model: Option<ModelChoice>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricChoice>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Model file whose recorded training time is reported.
    #[arg(long, conflicts_with = "meta")]
    pub model: Option<PathBuf>,
    /// Run-metadata JSON with a `train_time_s` field.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Comma-separated class order of the probability vectors.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// Where to write the report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Row label in the printed table.
    #[arg(long, default_value = "model")]
    pub name: String,
}
