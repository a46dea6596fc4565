//! vdamage-core: carotid ultrasound video pipeline.
//!
//! Stages, each usable on its own:
//! ingest -> preprocess -> sampler -> classify -> stats.
//!
//! `synth` generates videos and cohorts with full ground truth so every
//! stage can be exercised without clinical data. Nothing in this crate
//! spawns threads; batch parallelism lives in the CLI crate.

pub mod classify;
pub mod config;
pub mod ingest;
pub mod preprocess;
pub mod sampler;
pub mod seed;
pub mod stats;
pub mod synth;

pub use ingest::{ColorKind, FrameVolume, Site, VideoMeta};
pub use classify::{ClipPrediction, ModelHandle, VdLabel, VideoPrediction};
pub use preprocess::{PreprocessConfig, PreprocessOutcome, UiMask};
pub use sampler::{ClipIndexPlan, ClipTensor, NormStats, SamplingConfig};
