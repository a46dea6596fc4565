use std::time::Instant;

use log::info;
use rayon::prelude::*;
use vdamage_core::ingest;
use vdamage_core::sampler::export::{write_clip, write_index, ClipIndexRecord};
use vdamage_core::sampler::normalize;
use vdamage_core::stats::cohort::read_cohort;

use crate::args::{Global, SampleArgs};
use crate::common;
use crate::error::Result;
use crate::manifest::{RunManifest, Timing};
use crate::pipeline::{dx_labels, entry, video_clips, VideoError};

pub fn run(g: &Global, a: &SampleArgs) -> Result<RunManifest> {
    let settings = common::settings(g)?;
    let out = common::out_dir(g)?;
    let workers = common::workers(g);
    let labels = dx_labels(&read_cohort(&a.cohort)?);
    let inputs = ingest::discover_inputs(&a.input)?;
    let started = Instant::now();

    let results: Vec<_> = common::pool(workers)?.install(|| {
        inputs
            .par_iter()
            .map(|path| -> std::result::Result<_, VideoError> {
                let (meta, clips) = video_clips(path, &settings.sampling, settings.seed)?;
                let label = *labels.get(&meta.individual_id).ok_or_else(|| VideoError {
                    kind: "unknown_individual".into(),
                    message: format!("{} is not in the cohort table", meta.individual_id),
                })?;
                let mut records = Vec::new();
                for c in clips {
                    let c = if a.normalize {
                        normalize(&c, &settings.norm).map_err(|e| VideoError {
                            kind: "sampling".into(),
                            message: e.to_string(),
                        })?
                    } else {
                        c
                    };
                    let file = format!("{}_c{}.f32", meta.video_id, c.plan.clip_index);
                    write_clip(&out.join(&file), &c).map_err(|e| VideoError {
                        kind: "write".into(),
                        message: e.to_string(),
                    })?;
                    records.push(ClipIndexRecord::new(file, &meta.individual_id, label, &c));
                }
                Ok((meta, records))
            })
            .collect()
    });

    let mut entries = Vec::new();
    let mut records = Vec::new();
    for (path, r) in inputs.iter().zip(&results) {
        match r {
            Ok((meta, recs)) => {
                entries.push(entry(path, Ok((meta, format!("{} clips", recs.len())))));
                records.extend(recs.iter().cloned());
            }
            Err(e) => entries.push(entry(path, Err(e))),
        }
    }
    write_index(&out, &records)?;
    let manifest = RunManifest::new("sample", &settings, workers, entries, Timing::new(started.elapsed(), inputs.len()));
    manifest.write(&out)?;
    info!("sample: {} clips from {} videos", records.len(), manifest.count("processed"));
    Ok(manifest)
}
