//! Clip export for external training: one raw little-endian f32 file per
//! clip in T x H x W x C order, plus a tab-separated `index.tsv`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ClipIndexPlan, ClipTensor, SamplerError, CLIP_CHANNELS};

pub const INDEX_NAME: &str = "index.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipIndexRecord {
    pub clip_file: String,
    pub video_id: String,
    pub individual_id: String,
    /// 1 = hypertensive / high visual damage.
    pub label: u8,
    pub seed: u64,
    /// Comma-separated source frame indices.
    pub frame_indices: String,
    pub frames: usize,
    pub size: usize,
    pub normalized: bool,
}

impl ClipIndexRecord {
    pub fn new(clip_file: String, individual_id: &str, label: bool, clip: &ClipTensor) -> Self {
        ClipIndexRecord {
            clip_file,
            video_id: clip.plan.video_id.clone(),
            individual_id: individual_id.to_string(),
            label: u8::from(label),
            seed: clip.plan.seed,
            frame_indices: clip
                .plan
                .frame_indices
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
            frames: clip.frames,
            size: clip.size,
            normalized: clip.normalized,
        }
    }

    pub fn frame_index_list(&self) -> Result<Vec<usize>, SamplerError> {
        self.frame_indices
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| SamplerError::MalformedIndex(format!("frame index {s:?}")))
            })
            .collect()
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> SamplerError + '_ {
    move |source| SamplerError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn clip_to_bytes(clip: &ClipTensor) -> Vec<u8> {
    clip.data.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn write_clip(path: &Path, clip: &ClipTensor) -> Result<(), SamplerError> {
    std::fs::write(path, clip_to_bytes(clip)).map_err(io_err(path))
}

/// Read a raw clip file described by an index record.
pub fn read_clip(dir: &Path, rec: &ClipIndexRecord) -> Result<ClipTensor, SamplerError> {
    let path = dir.join(&rec.clip_file);
    let bytes = std::fs::read(&path).map_err(io_err(&path))?;
    let expected = rec.frames * rec.size * rec.size * CLIP_CHANNELS * 4;
    if bytes.len() != expected {
        return Err(SamplerError::MalformedIndex(format!(
            "{}: {} bytes, expected {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let frame_indices = rec.frame_index_list()?;
    Ok(ClipTensor {
        data,
        frames: rec.frames,
        size: rec.size,
        normalized: rec.normalized,
        plan: ClipIndexPlan {
            video_id: rec.video_id.clone(),
            clip_index: 0,
            start_frame: frame_indices.first().copied().unwrap_or(0),
            frame_indices,
            seed: rec.seed,
        },
    })
}

pub fn write_index(dir: &Path, records: &[ClipIndexRecord]) -> Result<PathBuf, SamplerError> {
    let path = dir.join(INDEX_NAME);
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_path(&path)
        .map_err(|e| SamplerError::MalformedIndex(e.to_string()))?;
    for r in records {
        w.serialize(r)
            .map_err(|e| SamplerError::MalformedIndex(e.to_string()))?;
    }
    // An empty index still gets its header line.
    if records.is_empty() {
        drop(w);
        let mut f = std::fs::File::create(&path).map_err(io_err(&path))?;
        writeln!(
            f,
            "clip_file\tvideo_id\tindividual_id\tlabel\tseed\tframe_indices\tframes\tsize\tnormalized"
        )
        .map_err(io_err(&path))?;
    } else {
        w.flush().map_err(io_err(&path))?;
    }
    Ok(path)
}

pub fn read_index(dir: &Path) -> Result<Vec<ClipIndexRecord>, SamplerError> {
    let path = dir.join(INDEX_NAME);
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(&path)
        .map_err(|e| SamplerError::MalformedIndex(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| SamplerError::MalformedIndex(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_file_layout_and_index_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let clip = ClipTensor {
            data: (0..2 * 4 * 4 * 3).map(|i| i as f32 * 0.5 - 3.0).collect(),
            frames: 2,
            size: 4,
            normalized: true,
            plan: ClipIndexPlan {
                video_id: "v\t1".replace('\t', "_"),
                clip_index: 0,
                start_frame: 3,
                frame_indices: vec![3, 9],
                seed: 77,
            },
        };
        write_clip(&dir.path().join("c0.f32"), &clip).unwrap();
        let raw = std::fs::read(dir.path().join("c0.f32")).unwrap();
        assert_eq!(raw.len(), 96 * 4);
        assert_eq!(&raw[4..8], &(-2.5f32).to_le_bytes());

        let rec = ClipIndexRecord::new("c0.f32".into(), "ind", true, &clip);
        write_index(dir.path(), std::slice::from_ref(&rec)).unwrap();
        let back = read_index(dir.path()).unwrap();
        assert_eq!(back, vec![rec.clone()]);
        let loaded = read_clip(dir.path(), &back[0]).unwrap();
        assert_eq!(loaded.data, clip.data);
        assert_eq!(loaded.plan.frame_indices, vec![3, 9]);
    }

    #[test]
    fn empty_index_has_header() {
        let dir = tempfile::tempdir().unwrap();
        write_index(dir.path(), &[]).unwrap();
        assert!(read_index(dir.path()).unwrap().is_empty());
    }
}
