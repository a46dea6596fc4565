//! Parity check against probabilities recorded by an external trainer.
//!
//! A parity directory is a clip export (`index.tsv` plus raw clips) with
//! an extra `parity.tsv` holding `clip_file` and `prob_high_vd` columns.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{clip_probability, ModelHandle};
use super::{ClassifyError, VdLabel};
use crate::sampler::export::{read_clip, read_index};
use crate::sampler::normalize;

pub const PARITY_NAME: &str = "parity.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityRow {
    pub clip_file: String,
    pub prob_high_vd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityReport {
    pub n: usize,
    pub agreement: f64,
    pub max_abs_delta: f64,
}

impl ParityReport {
    pub fn passes(&self, min_agreement: f64, max_delta: f64) -> bool {
        self.n > 0 && self.agreement >= min_agreement && self.max_abs_delta <= max_delta
    }
}

fn err(msg: impl Into<String>) -> ClassifyError {
    ClassifyError::Inference(msg.into())
}

pub fn check_parity(handle: &ModelHandle, dir: &Path) -> Result<ParityReport, ClassifyError> {
    let index: BTreeMap<String, _> = read_index(dir)
        .map_err(|e| err(e.to_string()))?
        .into_iter()
        .map(|r| (r.clip_file.clone(), r))
        .collect();
    let path = dir.join(PARITY_NAME);
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(&path)
        .map_err(|e| err(format!("{}: {e}", path.display())))?;
    let (mut n, mut agree, mut max_delta) = (0usize, 0usize, 0f64);
    for row in reader.deserialize::<ParityRow>() {
        let row = row.map_err(|e| err(e.to_string()))?;
        let rec = index
            .get(&row.clip_file)
            .ok_or_else(|| err(format!("{} is not in the clip index", row.clip_file)))?;
        let mut clip = read_clip(dir, rec).map_err(|e| err(e.to_string()))?;
        if !clip.normalized {
            clip = normalize(&clip, &handle.norm_stats).map_err(|e| err(e.to_string()))?;
        }
        let prob = clip_probability(handle, &clip)?;
        n += 1;
        agree += usize::from(VdLabel::from_prob(prob) == VdLabel::from_prob(row.prob_high_vd));
        max_delta = max_delta.max((prob - row.prob_high_vd).abs());
    }
    Ok(ParityReport {
        n,
        agreement: if n == 0 { 0.0 } else { agree as f64 / n as f64 },
        max_abs_delta: max_delta,
    })
}
