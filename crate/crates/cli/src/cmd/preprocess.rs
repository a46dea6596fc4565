use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vdamage_core::config::Settings;
use vdamage_core::ingest::{self, dicom};
use vdamage_core::preprocess::{preprocess_video, PreprocessOutcome};
use vdamage_core::seed::sha256_hex;

use crate::args::{Global, PreprocessArgs};
use crate::common::{self, input_name, input_stem};
use crate::error::Result;
use crate::manifest::{InputEntry, RunManifest, Status, Timing};

const STAMP_DIR: &str = ".stamps";
pub const EXCLUSIONS_FILE: &str = "exclusions.tsv";

#[derive(Debug, Serialize, Deserialize)]
struct Stamp {
    key: String,
    video_id: String,
    status: Status,
}

#[derive(Debug, Serialize)]
struct ExclusionRow<'a> {
    input: &'a str,
    video_id: &'a str,
    red_fraction: f64,
    blue_fraction: f64,
}

fn content_hash(path: &Path) -> std::io::Result<String> {
    if path.is_dir() {
        let mut names: Vec<PathBuf> = std::fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
        names.sort();
        let mut acc = String::new();
        for p in names.iter().filter(|p| p.is_file()) {
            acc.push_str(&input_name(p));
            acc.push(':');
            acc.push_str(&sha256_hex(&std::fs::read(p)?));
            acc.push('\n');
        }
        Ok(sha256_hex(acc.as_bytes()))
    } else {
        Ok(sha256_hex(&std::fs::read(path)?))
    }
}

fn process_one(path: &Path, out: &Path, settings: &Settings, config_hash: &str) -> InputEntry {
    let name = input_name(path);
    let stem = input_stem(path);
    let stamp_path = out.join(STAMP_DIR).join(format!("{stem}.json"));
    let output = format!("{stem}.dcm");
    let error = |kind: &str, message: String, video_id: Option<String>| InputEntry {
        input: name.clone(),
        video_id,
        status: Status::Error {
            kind: kind.to_string(),
            message,
        },
    };

    let key = match content_hash(path) {
        Ok(h) => sha256_hex(format!("{h}\n{config_hash}").as_bytes()),
        Err(e) => return error("unreadable_file", e.to_string(), None),
    };
    if let Ok(text) = std::fs::read_to_string(&stamp_path) {
        if let Ok(stamp) = serde_json::from_str::<Stamp>(&text) {
            let output_ok = !matches!(stamp.status, Status::Processed { .. }) || out.join(&output).is_file();
            if stamp.key == key && output_ok {
                return InputEntry {
                    input: name,
                    video_id: Some(stamp.video_id),
                    status: Status::Skipped {
                        previous: stamp.status.name().to_string(),
                    },
                };
            }
        }
    }

    let volume = match ingest::load_video(path) {
        Ok(v) => v,
        Err(e) => return error(e.kind(), e.to_string(), None),
    };
    let video_id = volume.meta.video_id.clone();
    let status = match preprocess_video(&volume, &settings.preprocess) {
        Err(e) => return error(e.kind(), e.to_string(), Some(video_id)),
        Ok(PreprocessOutcome::Excluded(v)) => Status::Excluded {
            reason: "doppler".into(),
            red_fraction: v.red_fraction,
            blue_fraction: v.blue_fraction,
        },
        Ok(PreprocessOutcome::Processed { volume, .. }) => {
            if let Err(e) = dicom::write(&volume, &out.join(&output)) {
                return error(e.kind(), e.to_string(), Some(video_id));
            }
            Status::Processed { output }
        }
    };
    let stamp = Stamp {
        key,
        video_id: video_id.clone(),
        status: status.clone(),
    };
    if let Err(e) = common::write_json(&stamp_path, &stamp) {
        warn!("{name}: could not write stamp: {e}");
    }
    InputEntry {
        input: name,
        video_id: Some(video_id),
        status,
    }
}

pub fn run(g: &Global, a: &PreprocessArgs) -> Result<RunManifest> {
    let settings = common::settings(g)?;
    let out = common::out_dir(g)?;
    std::fs::create_dir_all(out.join(STAMP_DIR))?;
    let workers = common::workers(g);
    let inputs = ingest::discover_inputs(&a.input)?;
    let config_hash = settings.hash();
    let started = Instant::now();
    let entries: Vec<InputEntry> = common::pool(workers)?.install(|| {
        inputs
            .par_iter()
            .map(|p| process_one(p, &out, &settings, &config_hash))
            .collect()
    });

    // Exclusion log covers skipped inputs too, via their stamps.
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for e in &entries {
        let status = match &e.status {
            Status::Skipped { .. } => {
                let stem = input_stem(&a.input.join(&e.input));
                let text = std::fs::read_to_string(out.join(STAMP_DIR).join(format!("{stem}.json")))?;
                serde_json::from_str::<Stamp>(&text)?.status
            }
            s => s.clone(),
        };
        if let Status::Excluded { red_fraction, blue_fraction, .. } = status {
            excluded.push((e.input.clone(), e.video_id.clone().unwrap_or_default(), red_fraction, blue_fraction));
        }
    }
    for (input, video_id, red_fraction, blue_fraction) in &excluded {
        rows.push(ExclusionRow {
            input,
            video_id,
            red_fraction: *red_fraction,
            blue_fraction: *blue_fraction,
        });
    }
    common::write_tsv(
        &out.join(EXCLUSIONS_FILE),
        &["input", "video_id", "red_fraction", "blue_fraction"],
        &rows,
    )?;

    let manifest = RunManifest::new("preprocess", &settings, workers, entries, Timing::new(started.elapsed(), inputs.len()));
    manifest.write(&out)?;
    info!(
        "preprocess: {} processed, {} excluded, {} errors, {} skipped",
        manifest.count("processed"),
        manifest.count("excluded"),
        manifest.count("error"),
        manifest.count("skipped")
    );
    Ok(manifest)
}
