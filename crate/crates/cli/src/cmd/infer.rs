use std::path::Path;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::Serialize;
use vdamage_core::classify::dump::{aggregate_records, write_dump, ClipRecord};
use vdamage_core::classify::{load_model, predict_clip, ClipPrediction, ModelHandle};
use vdamage_core::ingest;
use vdamage_core::sampler::export::{read_clip, read_index, INDEX_NAME};
use vdamage_core::sampler::normalize;

use crate::args::{Global, InferArgs};
use crate::common;
use crate::error::{CliError, Result};
use crate::manifest::{InputEntry, RunManifest, Status, Timing};
use crate::pipeline::{entry, predict_video};

pub const DUMP_FILE: &str = "clips.jsonl";
pub const VIDEOS_FILE: &str = "videos.tsv";
pub const INDIVIDUALS_FILE: &str = "individuals.tsv";

#[derive(Serialize)]
struct VideoRow<'a> {
    video_id: &'a str,
    individual_id: &'a str,
    n_clips: usize,
    votes_high: usize,
    mean_prob: f64,
    label: String,
}

#[derive(Serialize)]
struct IndividualRow<'a> {
    individual_id: &'a str,
    n_videos: usize,
    votes_high: usize,
    mean_prob: f64,
    label: String,
}

fn from_export(dir: &Path, model: &ModelHandle) -> Result<(Vec<InputEntry>, Vec<ClipPrediction>)> {
    let index = read_index(dir)?;
    let results: Vec<_> = index
        .par_iter()
        .map(|rec| -> std::result::Result<ClipPrediction, (String, String)> {
            let clip = read_clip(dir, rec).map_err(|e| ("clip_read".to_string(), e.to_string()))?;
            let clip = if clip.normalized {
                clip
            } else {
                normalize(&clip, &model.norm_stats).map_err(|e| ("sampling".to_string(), e.to_string()))?
            };
            predict_clip(model, &clip, &rec.individual_id).map_err(|e| ("inference".to_string(), e.to_string()))
        })
        .collect();
    let mut entries = Vec::new();
    let mut preds = Vec::new();
    for (rec, r) in index.iter().zip(results) {
        let status = match r {
            Ok(p) => {
                preds.push(p);
                Status::Processed { output: DUMP_FILE.into() }
            }
            Err((kind, message)) => Status::Error { kind, message },
        };
        entries.push(InputEntry {
            input: rec.clip_file.clone(),
            video_id: Some(rec.video_id.clone()),
            status,
        });
    }
    Ok((entries, preds))
}

pub fn run(g: &Global, a: &InferArgs) -> Result<RunManifest> {
    let settings = common::settings(g)?;
    let out = common::out_dir(g)?;
    let workers = common::workers(g);
    let model = load_model(&common::model_card(g)?).map_err(|e| CliError::Model(e.to_string()))?;
    let started = Instant::now();

    let pool = common::pool(workers)?;
    let (entries, preds) = if a.input.join(INDEX_NAME).is_file() {
        pool.install(|| from_export(&a.input, &model))?
    } else {
        let inputs = ingest::discover_inputs(&a.input)?;
        let results: Vec<_> = pool.install(|| {
            inputs
                .par_iter()
                .map(|p| predict_video(p, &settings.sampling, settings.seed, &model))
                .collect()
        });
        let mut entries = Vec::new();
        let mut preds = Vec::new();
        for (path, r) in inputs.iter().zip(results) {
            match r {
                Ok((meta, ps)) => {
                    entries.push(entry(path, Ok((&meta, DUMP_FILE.to_string()))));
                    preds.extend(ps);
                }
                Err(e) => entries.push(entry(path, Err(&e))),
            }
        }
        (entries, preds)
    };

    let records: Vec<ClipRecord> = preds.iter().map(ClipRecord::from_prediction).collect();
    write_dump(&out.join(DUMP_FILE), &records)?;
    let (videos, individuals) = if records.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        aggregate_records(&records, settings.aggregation)?
    };
    let video_rows: Vec<_> = videos
        .iter()
        .map(|v| VideoRow {
            video_id: &v.video_id,
            individual_id: &v.individual_id,
            n_clips: v.n_clips,
            votes_high: v.votes_high,
            mean_prob: v.mean_prob,
            label: v.label.to_string(),
        })
        .collect();
    common::write_tsv(
        &out.join(VIDEOS_FILE),
        &["video_id", "individual_id", "n_clips", "votes_high", "mean_prob", "label"],
        &video_rows,
    )?;
    let individual_rows: Vec<_> = individuals
        .iter()
        .map(|i| IndividualRow {
            individual_id: &i.individual_id,
            n_videos: i.n_videos,
            votes_high: i.votes_high,
            mean_prob: i.mean_prob,
            label: i.label.to_string(),
        })
        .collect();
    common::write_tsv(
        &out.join(INDIVIDUALS_FILE),
        &["individual_id", "n_videos", "votes_high", "mean_prob", "label"],
        &individual_rows,
    )?;
    let n = entries.len();
    let manifest = RunManifest::new("infer", &settings, workers, entries, Timing::new(started.elapsed(), n));
    manifest.write(&out)?;
    info!("infer: {} clips, {} videos, {} individuals", records.len(), videos.len(), individuals.len());
    Ok(manifest)
}
