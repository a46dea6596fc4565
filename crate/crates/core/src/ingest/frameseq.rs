//! Frame-sequence directories: a `manifest` of `key = value` lines next
//! to zero-padded numbered PNG frames (`frame_00000.png`, ...).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::{ColorType, ImageDecoder, ImageReader};

use super::{ColorKind, FrameVolume, IngestError, Site, VideoMeta, DEFAULT_FPS};

pub const MANIFEST_NAME: &str = "manifest";
const FRAME_PREFIX: &str = "frame_";
const FRAME_DIGITS: usize = 5;

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>, IngestError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            IngestError::CorruptHeader(format!("manifest line {}: expected key = value", lineno + 1))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn frame_number(path: &Path) -> Option<u64> {
    if !path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
    {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .take_while(char::is_ascii_digit)
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let unreadable = |source| IngestError::UnreadableFile {
        path: dir.to_path_buf(),
        source,
    };
    let mut numbered = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(unreadable)? {
        let path = entry.map_err(unreadable)?.path();
        if let Some(n) = frame_number(&path) {
            numbered.push((n, path));
        }
    }
    numbered.sort();
    Ok(numbered.into_iter().map(|(_, p)| p).collect())
}

fn color_of(ct: ColorType, path: &Path) -> Result<ColorKind, IngestError> {
    match ct {
        ColorType::L8 => Ok(ColorKind::Gray8),
        ColorType::Rgb8 => Ok(ColorKind::Rgb8),
        other => Err(IngestError::InvalidFrame(format!(
            "{}: color type {other:?}, expected 8-bit gray or RGB",
            path.display()
        ))),
    }
}

fn image_error(path: &Path, e: image::ImageError) -> IngestError {
    IngestError::InvalidFrame(format!("{}: {e}", path.display()))
}

fn read_manifest(dir: &Path) -> Result<BTreeMap<String, String>, IngestError> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|source| IngestError::UnreadableFile {
        path: path.clone(),
        source,
    })?;
    parse_manifest(&text)
}

pub fn probe(dir: &Path) -> Result<VideoMeta, IngestError> {
    let manifest = read_manifest(dir)?;
    let frames = frame_paths(dir)?;
    let first = frames
        .first()
        .ok_or_else(|| IngestError::CorruptHeader(format!("{}: no frames", dir.display())))?;
    let decoder = ImageReader::open(first)
        .map_err(|source| IngestError::UnreadableFile {
            path: first.clone(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| IngestError::UnreadableFile {
            path: first.clone(),
            source,
        })?
        .into_decoder()
        .map_err(|e| image_error(first, e))?;
    let (width, height) = decoder.dimensions();
    let color = color_of(decoder.color_type(), first)?;

    let fps = match manifest.get("fps") {
        Some(s) => s
            .parse::<f64>()
            .map_err(|_| IngestError::CorruptHeader(format!("manifest fps {s:?}")))?,
        None => {
            log::warn!(
                "{}: manifest has no fps, assuming {DEFAULT_FPS}",
                dir.display()
            );
            DEFAULT_FPS
        }
    };
    let video_id = manifest.get("video_id").cloned().unwrap_or_else(|| {
        dir.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Ok(VideoMeta {
        video_id,
        individual_id: manifest.get("individual_id").cloned().unwrap_or_default(),
        site: Site::parse(manifest.get("site").map(String::as_str).unwrap_or("")),
        fps,
        frame_count: frames.len(),
        width: width as usize,
        height: height as usize,
        color,
    })
}

pub fn load(dir: &Path) -> Result<FrameVolume, IngestError> {
    let meta = probe(dir)?;
    let mut pixels = Vec::with_capacity(meta.frame_len() * meta.frame_count);
    for path in frame_paths(dir)? {
        let img = ImageReader::open(&path)
            .map_err(|source| IngestError::UnreadableFile {
                path: path.clone(),
                source,
            })?
            .with_guessed_format()
            .map_err(|source| IngestError::UnreadableFile {
                path: path.clone(),
                source,
            })?
            .decode()
            .map_err(|e| image_error(&path, e))?;
        if img.width() as usize != meta.width
            || img.height() as usize != meta.height
            || color_of(img.color(), &path)? != meta.color
        {
            return Err(IngestError::InvalidFrame(format!(
                "{}: shape differs from first frame",
                path.display()
            )));
        }
        pixels.extend_from_slice(img.as_bytes());
    }
    FrameVolume::new(meta, pixels)
}

pub fn frame_file_name(index: usize) -> String {
    format!("{FRAME_PREFIX}{index:0width$}.png", width = FRAME_DIGITS)
}

pub fn write(volume: &FrameVolume, dir: &Path) -> Result<(), IngestError> {
    let werr = |path: &Path, source| IngestError::Write {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| werr(dir, e))?;
    let meta = &volume.meta;
    let manifest = format!(
        "video_id = {}\nindividual_id = {}\nsite = {}\nfps = {}\n",
        meta.video_id, meta.individual_id, meta.site, meta.fps
    );
    let mpath = dir.join(MANIFEST_NAME);
    std::fs::write(&mpath, manifest).map_err(|e| werr(&mpath, e))?;
    let ct = match meta.color {
        ColorKind::Gray8 => image::ExtendedColorType::L8,
        ColorKind::Rgb8 => image::ExtendedColorType::Rgb8,
    };
    for (i, frame) in volume.frames().enumerate() {
        let path = dir.join(frame_file_name(i));
        image::save_buffer(&path, frame, meta.width as u32, meta.height as u32, ct)
            .map_err(|e| IngestError::Write {
                path: path.clone(),
                source: std::io::Error::other(e.to_string()),
            })?;
    }
    Ok(())
}
