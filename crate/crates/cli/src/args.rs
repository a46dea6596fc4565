use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "vdamage", version, about = "Carotid ultrasound visual-damage pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Global {
    /// Flat key = value settings file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; never changes output bytes.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long = "model-card", global = true)]
    pub model_card: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus: videos, ground truth and cohort table.
    Synth(SynthArgs),
    /// Remove UI overlays, crop the heartline, exclude Doppler videos.
    Preprocess(PreprocessArgs),
    /// Export clips and an index file.
    Sample(SampleArgs),
    /// Fit the built-in baseline on the training split.
    Train(TrainArgs),
    /// Predict clips, vote videos and individuals.
    Infer(InferArgs),
    /// Stratified tables, metrics and figures.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dicom,
    Frames,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub individuals: usize,
    #[arg(long, default_value_t = 2)]
    pub videos_per_individual: usize,
    #[arg(long, default_value_t = 0.1)]
    pub discordance: f64,
    #[arg(long, default_value_t = 0.0)]
    pub doppler_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rgb_fraction: f64,
    #[arg(long, value_enum, default_value_t = Format::Dicom)]
    pub format: Format,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 48)]
    pub frames: usize,
    #[arg(long, default_value_t = 15.0)]
    pub fps: f64,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Directory of .dcm files and frame-sequence directories.
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Preprocessed video directory.
    pub input: PathBuf,
    /// Cohort table supplying the labels.
    #[arg(long)]
    pub cohort: PathBuf,
    /// Store clips already normalized with the configured statistics.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Preprocessed video directory.
    pub input: PathBuf,
    #[arg(long)]
    pub cohort: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Preprocessed video directory or clip export (with index.tsv).
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Clip prediction dump (clips.jsonl).
    pub predictions: PathBuf,
    #[arg(long)]
    pub cohort: PathBuf,
    /// Split file from `train`; adds validation-only metrics.
    #[arg(long)]
    pub split: Option<PathBuf>,
}
