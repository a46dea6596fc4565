use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::Serialize;
use vdamage_core::stats::cohort::write_cohort;
use vdamage_core::synth::{gen_cohort, gen_video, write_video, SynthCohortSpec, SynthVideoSpec, VideoFormat};

use crate::args::{Format, Global, SynthArgs};
use crate::common;
use crate::error::{CliError, Result};
use crate::manifest::{InputEntry, RunManifest, Status, Timing};

pub const COHORT_FILE: &str = "cohort.csv";
pub const PLANTED_FILE: &str = "planted.tsv";

#[derive(Serialize)]
struct PlantedRow<'a> {
    individual_id: &'a str,
    hypertension_dx: bool,
    discordant: bool,
    texture_class: u8,
    group: &'a str,
}

pub fn spec_from_args(a: &SynthArgs) -> SynthCohortSpec {
    SynthCohortSpec {
        n_individuals: a.individuals,
        videos_per_individual: a.videos_per_individual,
        discordance: a.discordance,
        doppler_rate: a.doppler_rate,
        rgb_fraction: a.rgb_fraction,
        video: SynthVideoSpec {
            width: a.size,
            height: a.size,
            frame_count: a.frames,
            fps: a.fps,
            ..SynthVideoSpec::default()
        },
        ..SynthCohortSpec::default()
    }
}

pub fn run(g: &Global, a: &SynthArgs) -> Result<RunManifest> {
    let settings = common::settings(g)?;
    let out = common::out_dir(g)?;
    let workers = common::workers(g);
    let spec = spec_from_args(a);
    let cohort = gen_cohort(&spec, settings.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let format = match a.format {
        Format::Dicom => VideoFormat::Dicom,
        Format::Frames => VideoFormat::FrameSequence,
    };
    let started = Instant::now();
    let entries: Vec<InputEntry> = common::pool(workers)?.install(|| {
        cohort
            .videos
            .par_iter()
            .map(|pv| {
                let status = gen_video(&pv.spec, pv.seed)
                    .map_err(|e| ("invalid_spec".to_string(), e.to_string()))
                    .and_then(|(v, truth)| {
                        write_video(&v, &truth, &out, format).map_err(|e| (e.kind().to_string(), e.to_string()))
                    });
                InputEntry {
                    input: pv.spec.video_id.clone(),
                    video_id: Some(pv.spec.video_id.clone()),
                    status: match status {
                        Ok(path) => Status::Processed {
                            output: path.strip_prefix(&out).unwrap_or(&path).display().to_string(),
                        },
                        Err((kind, message)) => Status::Error { kind, message },
                    },
                }
            })
            .collect()
    });
    write_cohort(&out.join(COHORT_FILE), &cohort.individuals)?;
    let planted: Vec<_> = cohort
        .individuals
        .iter()
        .zip(&cohort.planted)
        .map(|(r, p)| PlantedRow {
            individual_id: &p.individual_id,
            hypertension_dx: r.hypertension_dx,
            discordant: p.discordant,
            texture_class: p.texture_class,
            group: p.group.name(),
        })
        .collect();
    common::write_tsv(
        &out.join(PLANTED_FILE),
        &["individual_id", "hypertension_dx", "discordant", "texture_class", "group"],
        &planted,
    )?;
    let n = entries.len();
    let manifest = RunManifest::new("synth", &settings, workers, entries, Timing::new(started.elapsed(), n));
    manifest.write(&out)?;
    info!("synth: {} individuals, {} videos", cohort.individuals.len(), n);
    Ok(manifest)
}
