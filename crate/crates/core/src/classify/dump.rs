//! Prediction dump: one JSON object per clip and line.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::vote::{aggregate_individual, vote_video, AggregationPolicy};
use super::{ClassifyError, ClipPrediction, IndividualPrediction, VdLabel, VideoPrediction};
use crate::sampler::ClipIndexPlan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub clip_id: String,
    pub video_id: String,
    pub individual_id: String,
    pub prob: f64,
    pub label: VdLabel,
    pub clip_index: usize,
    pub frame_indices: Vec<usize>,
    pub seed: u64,
    pub model_id: String,
}

impl ClipRecord {
    pub fn from_prediction(p: &ClipPrediction) -> Self {
        ClipRecord {
            clip_id: format!("{}#{}", p.plan.video_id, p.plan.clip_index),
            video_id: p.plan.video_id.clone(),
            individual_id: p.individual_id.clone(),
            prob: p.prob_high_vd,
            label: p.label,
            clip_index: p.plan.clip_index,
            frame_indices: p.plan.frame_indices.clone(),
            seed: p.plan.seed,
            model_id: p.model_id.clone(),
        }
    }

    pub fn to_prediction(&self) -> ClipPrediction {
        ClipPrediction {
            plan: ClipIndexPlan {
                video_id: self.video_id.clone(),
                clip_index: self.clip_index,
                start_frame: self.frame_indices.first().copied().unwrap_or(0),
                frame_indices: self.frame_indices.clone(),
                seed: self.seed,
            },
            individual_id: self.individual_id.clone(),
            prob_high_vd: self.prob,
            label: self.label,
            model_id: self.model_id.clone(),
        }
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> ClassifyError {
    ClassifyError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_dump(path: &Path, records: &[ClipRecord]) -> Result<(), ClassifyError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| io(path, e))?;
        out.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| io(path, e))?;
    f.write_all(&out).map_err(|e| io(path, e))
}

pub fn read_dump(path: &Path) -> Result<Vec<ClipRecord>, ClassifyError> {
    let f = std::fs::File::open(path).map_err(|e| io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| io(path, format!("line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Vote clips into videos and videos into individuals, both sorted by id.
pub fn aggregate_records(
    records: &[ClipRecord],
    policy: AggregationPolicy,
) -> Result<(Vec<VideoPrediction>, Vec<IndividualPrediction>), ClassifyError> {
    let mut by_video: BTreeMap<&str, Vec<ClipPrediction>> = BTreeMap::new();
    for r in records {
        by_video.entry(&r.video_id).or_default().push(r.to_prediction());
    }
    let videos = by_video
        .values()
        .map(|clips| vote_video(clips))
        .collect::<Result<Vec<_>, _>>()?;
    let mut by_individual: BTreeMap<&str, Vec<VideoPrediction>> = BTreeMap::new();
    for v in &videos {
        by_individual.entry(&v.individual_id).or_default().push(v.clone());
    }
    let individuals = by_individual
        .values()
        .map(|vs| aggregate_individual(vs, policy))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((videos, individuals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(video: &str, ind: &str, k: usize, prob: f64) -> ClipRecord {
        ClipRecord {
            clip_id: format!("{video}#{k}"),
            video_id: video.into(),
            individual_id: ind.into(),
            prob,
            label: VdLabel::from_prob(prob),
            clip_index: k,
            frame_indices: vec![k, k + 1],
            seed: 5,
            model_id: "m".into(),
        }
    }

    #[test]
    fn dump_round_trip_and_aggregation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clips.jsonl");
        let records = vec![
            rec("v1", "p1", 0, 0.9),
            rec("v1", "p1", 1, 0.7),
            rec("v2", "p1", 0, 0.2),
            rec("v3", "p2", 0, 0.1),
        ];
        write_dump(&path, &records).unwrap();
        let back = read_dump(&path).unwrap();
        assert_eq!(back, records);
        let (videos, inds) = aggregate_records(&back, AggregationPolicy::Majority).unwrap();
        assert_eq!(videos.len(), 3);
        assert_eq!(inds.len(), 2);
        // p1: HighVD (0.8) vs LowVD (0.2) tie, mean 0.5 -> HighVD.
        assert_eq!(inds[0].label, VdLabel::HighVD);
        assert_eq!(inds[1].label, VdLabel::LowVD);
    }
}
