//! Per-video work shared by sample, train and infer.

use std::collections::BTreeMap;
use std::path::Path;

use vdamage_core::classify::{predict_clip, ClipPrediction, ModelHandle};
use vdamage_core::ingest::{self, VideoMeta};
use vdamage_core::sampler::{extract_clip, plan_clips, ClipTensor, SamplingConfig};
use vdamage_core::stats::IndividualRecord;

use crate::common::input_name;
use crate::manifest::{InputEntry, Status};

/// A per-video failure destined for the manifest.
#[derive(Debug, Clone)]
pub struct VideoError {
    pub kind: String,
    pub message: String,
}

impl VideoError {
    fn new(kind: &str, e: impl std::fmt::Display) -> Self {
        VideoError {
            kind: kind.to_string(),
            message: e.to_string(),
        }
    }
}

/// Load a video and extract its planned clips, unnormalized.
pub fn video_clips(path: &Path, sampling: &SamplingConfig, seed: u64) -> Result<(VideoMeta, Vec<ClipTensor>), VideoError> {
    let v = ingest::load_video(path).map_err(|e| VideoError::new(e.kind(), &e))?;
    let plans = plan_clips(&v.meta, sampling, seed).map_err(|e| VideoError::new("sampling", e))?;
    let clips = plans
        .iter()
        .map(|p| extract_clip(&v, p, sampling.out_size))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| VideoError::new("sampling", e))?;
    Ok((v.meta, clips))
}

pub fn predict_video(
    path: &Path,
    sampling: &SamplingConfig,
    seed: u64,
    model: &ModelHandle,
) -> Result<(VideoMeta, Vec<ClipPrediction>), VideoError> {
    let (meta, clips) = video_clips(path, sampling, seed)?;
    let preds = clips
        .iter()
        .map(|c| {
            let c = vdamage_core::sampler::normalize(c, &model.norm_stats).map_err(|e| VideoError::new("sampling", e))?;
            predict_clip(model, &c, &meta.individual_id).map_err(|e| VideoError::new("inference", e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((meta, preds))
}

pub fn entry(path: &Path, result: Result<(&VideoMeta, String), &VideoError>) -> InputEntry {
    match result {
        Ok((meta, output)) => InputEntry {
            input: input_name(path),
            video_id: Some(meta.video_id.clone()),
            status: Status::Processed { output },
        },
        Err(e) => InputEntry {
            input: input_name(path),
            video_id: None,
            status: Status::Error {
                kind: e.kind.clone(),
                message: e.message.clone(),
            },
        },
    }
}

pub fn dx_labels(cohort: &[IndividualRecord]) -> BTreeMap<String, bool> {
    cohort
        .iter()
        .map(|r| (r.individual_id.clone(), r.hypertension_dx))
        .collect()
}
