//! Video ingest: a narrow DICOM subset and a portable frame-sequence
//! directory format, both decoded into [`FrameVolume`].

pub mod dicom;
pub mod frameseq;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Frame rate used when a container carries no timing metadata.
pub const DEFAULT_FPS: f64 = 30.0;

/// Smallest accepted source frame edge, in pixels.
pub const MIN_SOURCE_EDGE: usize = 64;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: neither a DICOM file nor a frame-sequence directory")]
    UnsupportedFormat(PathBuf),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("pixel data truncated: expected {expected} bytes, found {found}")]
    PixelDataTruncated { expected: usize, found: usize },
    #[error("unsupported transfer syntax {0}")]
    UnsupportedTransferSyntax(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("write failed for {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    /// Short stable name, used in run manifests.
    pub fn kind(&self) -> &'static str {
        match self {
            IngestError::UnreadableFile { .. } => "unreadable_file",
            IngestError::UnsupportedFormat(_) => "unsupported_format",
            IngestError::CorruptHeader(_) => "corrupt_header",
            IngestError::PixelDataTruncated { .. } => "pixel_data_truncated",
            IngestError::UnsupportedTransferSyntax(_) => "unsupported_transfer_syntax",
            IngestError::InvalidFrame(_) => "invalid_frame",
            IngestError::Write { .. } => "write_failed",
        }
    }
}

/// Acquisition site of a carotid sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Site {
    CcaL,
    CcaR,
    EcaL,
    EcaR,
    IcaL,
    IcaR,
    Unknown,
}

impl Site {
    pub const ALL: [Site; 7] = [
        Site::CcaL,
        Site::CcaR,
        Site::EcaL,
        Site::EcaR,
        Site::IcaL,
        Site::IcaR,
        Site::Unknown,
    ];

    /// Total parse: anything unrecognized maps to `Unknown`.
    pub fn parse(s: &str) -> Site {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| match c {
                '-' | ' ' => '_',
                c => c.to_ascii_uppercase(),
            })
            .collect();
        match norm.as_str() {
            "CCA_L" | "L_CCA" | "LCCA" => Site::CcaL,
            "CCA_R" | "R_CCA" | "RCCA" => Site::CcaR,
            "ECA_L" | "L_ECA" | "LECA" => Site::EcaL,
            "ECA_R" | "R_ECA" | "RECA" => Site::EcaR,
            "ICA_L" | "L_ICA" | "LICA" => Site::IcaL,
            "ICA_R" | "R_ICA" | "RICA" => Site::IcaR,
            _ => Site::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Site::CcaL => "CCA_L",
            Site::CcaR => "CCA_R",
            Site::EcaL => "ECA_L",
            Site::EcaR => "ECA_R",
            Site::IcaL => "ICA_L",
            Site::IcaR => "ICA_R",
            Site::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorKind {
    Gray8,
    Rgb8,
}

impl ColorKind {
    pub fn channels(self) -> usize {
        match self {
            ColorKind::Gray8 => 1,
            ColorKind::Rgb8 => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    pub individual_id: String,
    pub site: Site,
    pub fps: f64,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub color: ColorKind,
}

impl VideoMeta {
    pub fn frame_len(&self) -> usize {
        self.width * self.height * self.color.channels()
    }

    /// Checks the source-file invariants enforced at ingest time.
    pub fn validate_source(&self) -> Result<(), IngestError> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(IngestError::CorruptHeader(format!("fps {} not positive", self.fps)));
        }
        if self.frame_count == 0 {
            return Err(IngestError::CorruptHeader("zero frames".into()));
        }
        if self.width < MIN_SOURCE_EDGE || self.height < MIN_SOURCE_EDGE {
            return Err(IngestError::CorruptHeader(format!(
                "frame size {}x{} below {MIN_SOURCE_EDGE} pixels",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// Decoded frame stack. Pixels are frame-major, then row-major, with
/// interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVolume {
    pub meta: VideoMeta,
    pixels: Vec<u8>,
}

impl FrameVolume {
    pub fn new(meta: VideoMeta, pixels: Vec<u8>) -> Result<Self, IngestError> {
        let expected = meta.frame_len() * meta.frame_count;
        if pixels.len() != expected {
            return Err(IngestError::PixelDataTruncated {
                expected,
                found: pixels.len(),
            });
        }
        Ok(FrameVolume { meta, pixels })
    }

    pub fn channels(&self) -> usize {
        self.meta.color.channels()
    }

    pub fn frame(&self, index: usize) -> &[u8] {
        let len = self.meta.frame_len();
        &self.pixels[index * len..(index + 1) * len]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[u8]> {
        self.pixels.chunks_exact(self.meta.frame_len().max(1))
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// On-disk layout of a video.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    Dicom,
    FrameSequence,
}

/// Identify the format without decoding anything.
pub fn detect_format(path: &Path) -> Result<SourceFormat, IngestError> {
    let md = std::fs::metadata(path).map_err(|source| IngestError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    if md.is_dir() {
        if path.join(frameseq::MANIFEST_NAME).is_file() {
            return Ok(SourceFormat::FrameSequence);
        }
        return Err(IngestError::UnsupportedFormat(path.to_path_buf()));
    }
    if md.len() < dicom::PREAMBLE_LEN as u64 + 4 {
        return Err(IngestError::CorruptHeader(format!(
            "{}: {} bytes is too short for any supported container",
            path.display(),
            md.len()
        )));
    }
    if dicom::has_magic(path)? {
        Ok(SourceFormat::Dicom)
    } else {
        Err(IngestError::UnsupportedFormat(path.to_path_buf()))
    }
}

/// Read the metadata of a video without decoding pixel data.
pub fn probe_metadata(path: &Path) -> Result<VideoMeta, IngestError> {
    let meta = match detect_format(path)? {
        SourceFormat::Dicom => dicom::probe(path)?,
        SourceFormat::FrameSequence => frameseq::probe(path)?,
    };
    meta.validate_source()?;
    Ok(meta)
}

/// Fully decode a video.
pub fn load_video(path: &Path) -> Result<FrameVolume, IngestError> {
    let volume = match detect_format(path)? {
        SourceFormat::Dicom => dicom::load(path)?,
        SourceFormat::FrameSequence => frameseq::load(path)?,
    };
    volume.meta.validate_source()?;
    Ok(volume)
}

/// Find ingestible inputs directly below `dir`: `.dcm` files and
/// directories holding a frame-sequence manifest. Sorted by path.
pub fn discover_inputs(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let entries = std::fs::read_dir(dir).map_err(|source| IngestError::UnreadableFile {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::UnreadableFile {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let is_dcm = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("dcm"));
        if (path.is_file() && is_dcm) || (path.is_dir() && path.join(frameseq::MANIFEST_NAME).is_file()) {
            found.push(path);
        }
    }
    found.sort();
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_parse_is_total() {
        assert_eq!(Site::parse("cca_l"), Site::CcaL);
        assert_eq!(Site::parse("ICA-R"), Site::IcaR);
        assert_eq!(Site::parse("femoral"), Site::Unknown);
        assert_eq!(Site::parse(""), Site::Unknown);
        for s in Site::ALL {
            assert_eq!(Site::parse(s.as_str()), s);
        }
    }

    #[test]
    fn zero_byte_file_is_corrupt_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.dcm");
        std::fs::write(&p, b"").unwrap();
        assert!(matches!(probe_metadata(&p), Err(IngestError::CorruptHeader(_))));
    }

    #[test]
    fn non_dicom_file_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("notes.txt");
        std::fs::write(&p, vec![b'x'; 400]).unwrap();
        assert!(matches!(probe_metadata(&p), Err(IngestError::UnsupportedFormat(_))));
        assert!(matches!(
            probe_metadata(dir.path()),
            Err(IngestError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn missing_file_is_unreadable() {
        let p = Path::new("/nonexistent/video.dcm");
        assert!(matches!(probe_metadata(p), Err(IngestError::UnreadableFile { .. })));
    }

    #[test]
    fn volume_rejects_wrong_pixel_count() {
        let meta = VideoMeta {
            video_id: "v".into(),
            individual_id: "i".into(),
            site: Site::CcaL,
            fps: 30.0,
            frame_count: 2,
            width: 64,
            height: 64,
            color: ColorKind::Gray8,
        };
        assert!(FrameVolume::new(meta.clone(), vec![0; 64 * 64 * 2]).is_ok());
        assert!(FrameVolume::new(meta, vec![0; 64 * 64]).is_err());
    }
}
