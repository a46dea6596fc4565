use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vdamage_core::classify::dump::{aggregate_records, ClipRecord};
use vdamage_core::classify::features::{clip_features, FEATURE_COUNT};
use vdamage_core::classify::model::train_builtin;
use vdamage_core::classify::ModelHandle;
use vdamage_core::ingest;
use vdamage_core::sampler::{augment, normalize};
use vdamage_core::seed;
use vdamage_core::stats::cohort::read_cohort;
use vdamage_core::stats::split_cohort;

use crate::args::{Global, TrainArgs};
use crate::common;
use crate::error::{CliError, Result};
use crate::manifest::{RunManifest, Timing};
use crate::metrics::{LevelMetrics, Metrics};
use crate::pipeline::{dx_labels, entry, predict_video, video_clips, VideoError};

pub const SPLIT_FILE: &str = "split.tsv";
pub const SUMMARY_FILE: &str = "train_summary.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRow {
    pub individual_id: String,
    pub split: String,
}

#[derive(Debug, Serialize)]
pub struct TrainSummary {
    pub model_id: String,
    pub train_individuals: usize,
    pub val_individuals: usize,
    pub train_clips: usize,
    /// Against the diagnosis labels, on validation individuals only.
    pub validation: Option<Metrics>,
}

/// Validation individuals from a split file.
pub fn read_val_ids(path: &std::path::Path) -> Result<BTreeSet<String>> {
    let rows: Vec<SplitRow> = common::read_tsv(path)?;
    Ok(rows.into_iter().filter(|r| r.split == "val").map(|r| r.individual_id).collect())
}

pub fn run(g: &Global, a: &TrainArgs) -> Result<TrainSummary> {
    let settings = common::settings(g)?;
    let card = common::model_card(g)?;
    let out = match &g.out {
        Some(_) => common::out_dir(g)?,
        None => card.parent().map(|p| p.to_path_buf()).unwrap_or_default(),
    };
    let workers = common::workers(g);
    let pool = common::pool(workers)?;
    let labels = dx_labels(&read_cohort(&a.cohort)?);
    let inputs = ingest::discover_inputs(&a.input)?;
    let started = Instant::now();

    // Individuals are split, not videos; only those with a video and a
    // label take part.
    let metas: Vec<_> = pool.install(|| {
        inputs
            .par_iter()
            .map(|p| ingest::probe_metadata(p).map(|m| m.individual_id))
            .collect()
    });
    let present: BTreeSet<String> = metas
        .iter()
        .zip(&inputs)
        .filter_map(|(m, p)| match m {
            Ok(id) => Some(id),
            Err(e) => {
                warn!("{}: {e}", p.display());
                None
            }
        })
        .filter(|id| labels.contains_key(*id))
        .cloned()
        .collect();
    let ids: Vec<String> = present.into_iter().collect();
    let split = split_cohort(&ids, settings.val_fraction, settings.seed)?;
    let mut rows: Vec<SplitRow> = split
        .train
        .iter()
        .map(|id| SplitRow { individual_id: id.clone(), split: "train".into() })
        .chain(split.val.iter().map(|id| SplitRow { individual_id: id.clone(), split: "val".into() }))
        .collect();
    rows.sort_by(|a, b| a.individual_id.cmp(&b.individual_id));
    common::write_tsv(&out.join(SPLIT_FILE), &["individual_id", "split"], &rows)?;

    let train_paths: Vec<_> = inputs
        .iter()
        .zip(&metas)
        .filter(|(_, m)| m.as_ref().is_ok_and(|id| split.train.binary_search(id).is_ok()))
        .map(|(p, _)| p.clone())
        .collect();
    let results: Vec<std::result::Result<_, VideoError>> = pool.install(|| {
        train_paths
            .par_iter()
            .map(|path| {
                let (meta, clips) = video_clips(path, &settings.sampling, settings.seed)?;
                let label = labels[&meta.individual_id];
                clips
                    .iter()
                    .map(|c| {
                        let aug_seed = seed::derive(c.plan.seed, &[b"augment"]);
                        let c = normalize(&augment(c, &settings.augment, aug_seed), &settings.norm).map_err(|e| VideoError {
                            kind: "sampling".into(),
                            message: e.to_string(),
                        })?;
                        Ok((clip_features(&c), label))
                    })
                    .collect::<std::result::Result<Vec<([f64; FEATURE_COUNT], bool)>, _>>()
            })
            .collect()
    });
    let mut samples = Vec::new();
    let mut entries = Vec::new();
    for (path, r) in train_paths.iter().zip(results) {
        match r {
            Ok(s) => {
                samples.extend(s);
                entries.push(crate::manifest::InputEntry {
                    input: common::input_name(path),
                    video_id: None,
                    status: crate::manifest::Status::Processed { output: "train".into() },
                });
            }
            Err(e) => entries.push(entry(path, Err(&e))),
        }
    }
    let model = train_builtin(&samples, &settings.train, settings.seed).map_err(CliError::from)?;
    let model_id = format!("builtin-linear-s{}-{}", settings.seed, &settings.hash()[..8]);
    let handle = ModelHandle::builtin(&model_id, settings.norm, model);
    handle.save_builtin(&card)?;

    // Validation at clip, video and individual level.
    let val_paths: Vec<_> = inputs
        .iter()
        .zip(&metas)
        .filter(|(_, m)| m.as_ref().is_ok_and(|id| split.is_val(id)))
        .map(|(p, _)| p.clone())
        .collect();
    let preds: Vec<_> = pool.install(|| {
        val_paths
            .par_iter()
            .map(|p| predict_video(p, &settings.sampling, settings.seed, &handle))
            .collect()
    });
    let records: Vec<ClipRecord> = preds
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .flat_map(|(_, ps)| ps.iter().map(ClipRecord::from_prediction))
        .collect();
    let validation = if records.is_empty() {
        None
    } else {
        Some(evaluate(&records, &labels, settings.aggregation)?)
    };
    let summary = TrainSummary {
        model_id,
        train_individuals: split.train.len(),
        val_individuals: split.val.len(),
        train_clips: samples.len(),
        validation,
    };
    common::write_json(&out.join(SUMMARY_FILE), &summary)?;
    let manifest = RunManifest::new("train", &settings, workers, entries, Timing::new(started.elapsed(), train_paths.len()));
    manifest.write(&out)?;
    info!("train: {} clips, model {}", summary.train_clips, summary.model_id);
    Ok(summary)
}

/// Metrics of a dump against per-individual truth labels.
pub fn evaluate(
    records: &[ClipRecord],
    truth: &BTreeMap<String, bool>,
    policy: vdamage_core::classify::vote::AggregationPolicy,
) -> Result<Metrics> {
    let (videos, individuals) = aggregate_records(records, policy)?;
    let t = |id: &str| truth.get(id).copied();
    Ok(Metrics {
        clip: LevelMetrics::from_pairs(records.iter().filter_map(|r| Some((r.label.is_high(), t(&r.individual_id)?)))),
        video: LevelMetrics::from_pairs(videos.iter().filter_map(|v| Some((v.label.is_high(), t(&v.individual_id)?)))),
        individual: LevelMetrics::from_pairs(individuals.iter().filter_map(|i| Some((i.label.is_high(), t(&i.individual_id)?)))),
    })
}
