//! Per-run inventory: every discovered input once, with a terminal status.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use vdamage_core::config::Settings;
use vdamage_core::seed::sha256_hex;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Processed {
        output: String,
    },
    Excluded {
        reason: String,
        red_fraction: f64,
        blue_fraction: f64,
    },
    Error {
        kind: String,
        message: String,
    },
    /// Already done by an earlier run with the same content and config.
    Skipped {
        previous: String,
    },
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Processed { .. } => "processed",
            Status::Excluded { .. } => "excluded",
            Status::Error { .. } => "error",
            Status::Skipped { .. } => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEntry {
    pub input: String,
    pub video_id: Option<String>,
    #[serde(flatten)]
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
    pub items: usize,
    pub items_per_s: f64,
}

impl Timing {
    pub fn new(elapsed: Duration, items: usize) -> Self {
        let seconds = elapsed.as_secs_f64();
        Timing {
            seconds,
            items,
            items_per_s: if seconds > 0.0 { items as f64 / seconds } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub config_hash: String,
    /// Every setting, defaults included.
    pub config: BTreeMap<String, String>,
    pub workers: usize,
    pub inputs: Vec<InputEntry>,
    pub counts: BTreeMap<String, usize>,
    pub timing: Timing,
}

impl RunManifest {
    pub fn new(command: &str, settings: &Settings, workers: usize, inputs: Vec<InputEntry>, timing: Timing) -> Self {
        let config_hash = settings.hash();
        let mut id_src = format!("{command}\n{config_hash}\n");
        for e in &inputs {
            id_src.push_str(&e.input);
            id_src.push('\n');
        }
        let config = settings
            .render()
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        let mut counts = BTreeMap::new();
        for e in &inputs {
            *counts.entry(e.status.name().to_string()).or_insert(0) += 1;
        }
        RunManifest {
            run_id: sha256_hex(id_src.as_bytes())[..16].to_string(),
            command: command.to_string(),
            config_hash,
            config,
            workers,
            inputs,
            counts,
            timing,
        }
    }

    pub fn count(&self, status: &str) -> usize {
        self.counts.get(status).copied().unwrap_or(0)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        crate::common::write_json(&dir.join(MANIFEST_FILE), self)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
