use std::path::{Path, PathBuf};

use serde::Serialize;
use vdamage_core::config::Settings;

use crate::args::Global;
use crate::error::{CliError, Result};

pub fn settings(g: &Global) -> Result<Settings> {
    let mut s = match &g.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    if let Some(seed) = g.seed {
        s.seed = seed;
    }
    Ok(s)
}

pub fn workers(g: &Global) -> usize {
    g.workers
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))
}

pub fn out_dir(g: &Global) -> Result<PathBuf> {
    let out = g.out.clone().ok_or_else(|| CliError::Usage("--out is required".into()))?;
    std::fs::create_dir_all(&out)?;
    Ok(out)
}

pub fn model_card(g: &Global) -> Result<PathBuf> {
    g.model_card
        .clone()
        .ok_or_else(|| CliError::Usage("--model-card is required".into()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Header is written even when `rows` is empty.
pub fn write_tsv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tsv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().delimiter(b'\t').from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Name of an input relative to its directory.
pub fn input_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn input_stem(path: &Path) -> String {
    if path.is_dir() {
        input_name(path)
    } else {
        path.file_stem().map_or_else(|| input_name(path), |n| n.to_string_lossy().into_owned())
    }
}
