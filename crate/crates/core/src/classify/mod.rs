//! Clip scoring and clip -> video -> individual aggregation.

pub mod dump;
pub mod features;
#[cfg(feature = "onnx")]
mod graph;
pub mod model;
pub mod parity;
pub mod vote;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampler::ClipIndexPlan;

pub use model::{load_model, predict_clip, train_builtin, LinearModel, ModelCard, ModelHandle, ModelKind, TrainConfig};
pub use vote::{aggregate_individual, vote_video, AggregationPolicy};

/// Probability at or above which a clip, video or individual is HighVD.
pub const HIGH_VD_THRESHOLD: f64 = 0.5;

/// Model output class. Index 1 is HighVD throughout the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VdLabel {
    LowVD,
    HighVD,
}

impl VdLabel {
    pub fn from_prob(prob: f64) -> VdLabel {
        if prob >= HIGH_VD_THRESHOLD {
            VdLabel::HighVD
        } else {
            VdLabel::LowVD
        }
    }

    pub fn is_high(self) -> bool {
        self == VdLabel::HighVD
    }

    pub fn from_high(high: bool) -> VdLabel {
        if high {
            VdLabel::HighVD
        } else {
            VdLabel::LowVD
        }
    }
}

impl fmt::Display for VdLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VdLabel::LowVD => "LowVD",
            VdLabel::HighVD => "HighVD",
        })
    }
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("model load failed: {0}")]
    ModelLoad(String),
    #[error("clip shape {found:?} does not match model input {expected:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("clip must be normalized with the model's statistics first")]
    NotNormalized,
    #[error("inference failed: {0}")]
    Inference(String),
    #[error("training needs both classes present")]
    SingleClassDataset,
    #[error("empty prediction set")]
    EmptyPredictionSet,
    #[error("predictions mix videos {0} and {1}")]
    MixedVideoIds(String, String),
    #[error("predictions mix individuals {0} and {1}")]
    MixedIndividualIds(String, String),
    #[error("{path}: {message}")]
    Io { path: std::path::PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipPrediction {
    pub plan: ClipIndexPlan,
    pub individual_id: String,
    pub prob_high_vd: f64,
    pub label: VdLabel,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoPrediction {
    pub video_id: String,
    pub individual_id: String,
    pub n_clips: usize,
    pub votes_high: usize,
    pub mean_prob: f64,
    pub label: VdLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualPrediction {
    pub individual_id: String,
    pub n_videos: usize,
    pub votes_high: usize,
    pub mean_prob: f64,
    pub label: VdLabel,
}
