//! Clip planning, extraction, normalization and augmentation.
//!
//! A clip is 16 frames spread over a fixed wall-clock window, resized
//! so the short side is 224 and center-cropped to 224x224x3.

pub mod export;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{FrameVolume, VideoMeta};
use crate::seed;

pub const CLIP_LEN: usize = 16;
pub const CLIP_SIZE: usize = 224;
pub const CLIP_CHANNELS: usize = 3;
pub const CLIP_DURATION_S: f64 = 2.1;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("video has {frames} frames, clips need {clip_len}")]
    VideoTooShort { frames: usize, clip_len: usize },
    #[error("invalid sampling request: {0}")]
    InvalidRequest(String),
    #[error("frame index {index} out of range for {frame_count} frames")]
    IndexOutOfRange { index: usize, frame_count: usize },
    #[error("clip is already normalized")]
    AlreadyNormalized,
    #[error("class weights need both classes present")]
    SingleClassDataset,
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed clip index: {0}")]
    MalformedIndex(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub n_clips: usize,
    pub clip_len: usize,
    pub duration_s: f64,
    pub out_size: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n_clips: 2,
            clip_len: CLIP_LEN,
            duration_s: CLIP_DURATION_S,
            out_size: CLIP_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipIndexPlan {
    pub video_id: String,
    pub clip_index: usize,
    pub start_frame: usize,
    pub frame_indices: Vec<usize>,
    pub seed: u64,
}

impl ClipIndexPlan {
    /// Inclusive number of source frames the clip covers.
    pub fn span(&self) -> usize {
        match (self.frame_indices.first(), self.frame_indices.last()) {
            (Some(a), Some(b)) => b - a + 1,
            _ => 0,
        }
    }
}

/// Per-channel normalization statistics for pixel values scaled to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: [f32; 3],
    pub std: [f32; 3],
}

impl NormStats {
    pub fn identity() -> Self {
        NormStats {
            mean: [0.0; 3],
            std: [1.0; 3],
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.mean.iter().chain(&self.std).any(|v| !v.is_finite()) {
            return Err("normalization statistics must be finite".into());
        }
        if self.std.iter().any(|&s| s <= 0.0) {
            return Err("normalization std must be positive".into());
        }
        Ok(())
    }
}

/// Clip tensor in frames x height x width x channels order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipTensor {
    pub data: Vec<f32>,
    pub frames: usize,
    pub size: usize,
    pub normalized: bool,
    pub plan: ClipIndexPlan,
}

impl ClipTensor {
    pub fn shape(&self) -> [usize; 4] {
        [self.frames, self.size, self.size, CLIP_CHANNELS]
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let len = self.size * self.size * CLIP_CHANNELS;
        &self.data[t * len..(t + 1) * len]
    }
}

/// Number of frames the sampling window covers for a video.
pub fn window_len(meta: &VideoMeta, duration_s: f64) -> usize {
    let wanted = (duration_s * meta.fps).round().max(1.0) as usize;
    wanted.min(meta.frame_count)
}

/// `count` values from `start` to `end` inclusive, rounded half away
/// from zero.
fn rounded_linspace(start: usize, end: usize, count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![start];
    }
    let step = (end - start) as f64 / (count - 1) as f64;
    (0..count)
        .map(|i| (start as f64 + i as f64 * step).round() as usize)
        .collect()
}

pub fn plan_clips(
    meta: &VideoMeta,
    cfg: &SamplingConfig,
    base_seed: u64,
) -> Result<Vec<ClipIndexPlan>, SamplerError> {
    if cfg.clip_len == 0 || cfg.n_clips == 0 {
        return Err(SamplerError::InvalidRequest(
            "clip length and clip count must be at least 1".into(),
        ));
    }
    if !(cfg.duration_s.is_finite() && cfg.duration_s > 0.0) {
        return Err(SamplerError::InvalidRequest(format!(
            "clip duration {}",
            cfg.duration_s
        )));
    }
    if meta.frame_count < cfg.clip_len {
        return Err(SamplerError::VideoTooShort {
            frames: meta.frame_count,
            clip_len: cfg.clip_len,
        });
    }
    let window = window_len(meta, cfg.duration_s);
    let last_start = meta.frame_count - window;
    Ok((0..cfg.n_clips)
        .map(|k| {
            let clip_seed = seed::derive(
                base_seed,
                &[meta.video_id.as_bytes(), b"clip", &(k as u64).to_le_bytes()],
            );
            let start = seed::rng(clip_seed).gen_range(0..=last_start);
            ClipIndexPlan {
                video_id: meta.video_id.clone(),
                clip_index: k,
                start_frame: start,
                frame_indices: rounded_linspace(start, start + window - 1, cfg.clip_len),
                seed: clip_seed,
            }
        })
        .collect())
}

/// Bilinear sample positions along one axis: for each output index, the
/// two source neighbours and the weight of the second one.
///
/// `scaled_len` is the length of the virtual resized axis and `offset`
/// the first resized index kept by the crop. Pixel centres are aligned
/// (half-pixel convention).
fn axis_taps(src_len: usize, scaled_len: usize, offset: usize, out_len: usize) -> Vec<(usize, usize, f32)> {
    let scale = src_len as f64 / scaled_len as f64;
    (0..out_len)
        .map(|o| {
            let pos = ((offset + o) as f64 + 0.5) * scale - 0.5;
            let pos = pos.clamp(0.0, (src_len - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(src_len - 1);
            (lo, hi, (pos - lo as f64) as f32)
        })
        .collect()
}

#[inline]
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    // Exact when a == b, so constants survive resampling.
    a + (b - a) * t
}

/// Resample one interleaved frame; `read(y, x, c)` returns a source value
/// and `src_channels` is 1 (replicated) or 3.
#[allow(clippy::too_many_arguments)]
fn resample_into(
    out: &mut [f32],
    out_size: usize,
    rows: &[(usize, usize, f32)],
    cols: &[(usize, usize, f32)],
    src_channels: usize,
    read: impl Fn(usize, usize, usize) -> f32,
    flip: bool,
) {
    for (oy, &(y0, y1, ty)) in rows.iter().enumerate() {
        for (ox, &(x0, x1, tx)) in cols.iter().enumerate() {
            let dst_x = if flip { out_size - 1 - ox } else { ox };
            let base = (oy * out_size + dst_x) * CLIP_CHANNELS;
            for c in 0..CLIP_CHANNELS {
                let sc = if src_channels == 1 { 0 } else { c };
                let top = lerp(read(y0, x0, sc), read(y0, x1, sc), tx);
                let bottom = lerp(read(y1, x0, sc), read(y1, x1, sc), tx);
                out[base + c] = lerp(top, bottom, ty);
            }
        }
    }
}

/// Short-side resize target for a `w`x`h` frame.
fn short_side_dims(w: usize, h: usize, short: usize) -> (usize, usize) {
    if h <= w {
        let nw = ((w as f64 * short as f64 / h as f64).round() as usize).max(short);
        (nw, short)
    } else {
        let nh = ((h as f64 * short as f64 / w as f64).round() as usize).max(short);
        (short, nh)
    }
}

/// Gather the planned frames, resize the short side to `out_size` and
/// center-crop. Values stay on the 0..=255 scale.
pub fn extract_clip(v: &FrameVolume, plan: &ClipIndexPlan, out_size: usize) -> Result<ClipTensor, SamplerError> {
    let n = v.meta.frame_count;
    if let Some(&bad) = plan.frame_indices.iter().find(|&&i| i >= n) {
        return Err(SamplerError::IndexOutOfRange {
            index: bad,
            frame_count: n,
        });
    }
    let (w, h) = (v.meta.width, v.meta.height);
    let (nw, nh) = short_side_dims(w, h, out_size);
    let cols = axis_taps(w, nw, (nw - out_size) / 2, out_size);
    let rows = axis_taps(h, nh, (nh - out_size) / 2, out_size);
    let ch = v.channels();
    let frame_len = out_size * out_size * CLIP_CHANNELS;
    let mut data = vec![0f32; frame_len * plan.frame_indices.len()];
    for (out, &idx) in data.chunks_exact_mut(frame_len).zip(&plan.frame_indices) {
        let src = v.frame(idx);
        resample_into(
            out,
            out_size,
            &rows,
            &cols,
            ch,
            |y, x, c| f32::from(src[(y * w + x) * ch + c]),
            false,
        );
    }
    Ok(ClipTensor {
        data,
        frames: plan.frame_indices.len(),
        size: out_size,
        normalized: false,
        plan: plan.clone(),
    })
}

/// `(x / 255 - mean) / std` per channel.
pub fn normalize(c: &ClipTensor, s: &NormStats) -> Result<ClipTensor, SamplerError> {
    if c.normalized {
        return Err(SamplerError::AlreadyNormalized);
    }
    s.validate().map_err(SamplerError::InvalidRequest)?;
    let mut out = c.clone();
    for px in out.data.chunks_exact_mut(CLIP_CHANNELS) {
        for ch in 0..CLIP_CHANNELS {
            px[ch] = (px[ch] / 255.0 - s.mean[ch]) / s.std[ch];
        }
    }
    out.normalized = true;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugConfig {
    /// Short-side scale range relative to the clip size; values below 1
    /// are raised to 1 so a full-size crop always exists.
    pub scale_min: f64,
    pub scale_max: f64,
    pub flip_prob: f64,
}

impl Default for AugConfig {
    fn default() -> Self {
        AugConfig {
            scale_min: 1.0,
            scale_max: 1.25,
            flip_prob: 0.5,
        }
    }
}

/// Random short-side scaling, random crop back to the clip size and
/// random horizontal flip, all drawn from `seed`.
pub fn augment(c: &ClipTensor, cfg: &AugConfig, seed: u64) -> ClipTensor {
    let mut rng = seed::rng(seed);
    let lo = cfg.scale_min.max(1.0);
    let hi = cfg.scale_max.max(lo);
    let scale = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let size = c.size;
    let scaled = ((scale * size as f64).round() as usize).max(size);
    let oy = rng.gen_range(0..=scaled - size);
    let ox = rng.gen_range(0..=scaled - size);
    let flip = rng.gen::<f64>() < cfg.flip_prob;

    let rows = axis_taps(size, scaled, oy, size);
    let cols = axis_taps(size, scaled, ox, size);
    let frame_len = size * size * CLIP_CHANNELS;
    let mut data = vec![0f32; c.data.len()];
    for (t, out) in data.chunks_exact_mut(frame_len).enumerate() {
        let src = c.frame(t);
        resample_into(
            out,
            size,
            &rows,
            &cols,
            CLIP_CHANNELS,
            |y, x, ch| src[(y * size + x) * CLIP_CHANNELS + ch],
            flip,
        );
    }
    ClipTensor {
        data,
        ..c.clone()
    }
}

/// Per-sample weights `N / (2 N_k)` giving both classes equal expected
/// draw probability.
pub fn class_weights(labels: &[bool]) -> Result<Vec<f64>, SamplerError> {
    let n = labels.len() as f64;
    let positives = labels.iter().filter(|&&l| l).count() as f64;
    let negatives = n - positives;
    if positives == 0.0 || negatives == 0.0 {
        return Err(SamplerError::SingleClassDataset);
    }
    Ok(labels
        .iter()
        .map(|&l| n / (2.0 * if l { positives } else { negatives }))
        .collect())
}

/// Draw `count` sample indices with replacement, proportional to weight.
pub fn weighted_draws(weights: &[f64], count: usize, seed: u64) -> Result<Vec<usize>, SamplerError> {
    let dist = WeightedIndex::new(weights).map_err(|e| SamplerError::InvalidRequest(e.to_string()))?;
    let mut rng = seed::rng(seed);
    Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{ColorKind, Site};

    fn meta(fps: f64, frames: usize, w: usize, h: usize, color: ColorKind) -> VideoMeta {
        VideoMeta {
            video_id: "vid".into(),
            individual_id: "ind".into(),
            site: Site::CcaL,
            fps,
            frame_count: frames,
            width: w,
            height: h,
            color,
        }
    }

    fn volume(m: VideoMeta, f: impl Fn(usize, usize, usize, usize) -> u8) -> FrameVolume {
        let c = m.color.channels();
        let mut px = Vec::new();
        for t in 0..m.frame_count {
            for y in 0..m.height {
                for x in 0..m.width {
                    for ch in 0..c {
                        px.push(f(t, y, x, ch));
                    }
                }
            }
        }
        FrameVolume::new(m, px).unwrap()
    }

    #[test]
    fn thirty_fps_window_is_63_frames() {
        let m = meta(30.0, 300, 64, 64, ColorKind::Gray8);
        assert_eq!(window_len(&m, 2.1), 63);
        let plans = plan_clips(&m, &SamplingConfig { n_clips: 5, ..Default::default() }, 1).unwrap();
        assert_eq!(plans.len(), 5);
        for p in &plans {
            assert_eq!(p.span(), 63);
            assert_eq!(p.frame_indices.len(), 16);
            assert!(p.frame_indices.windows(2).all(|w| w[0] <= w[1]));
            assert!(*p.frame_indices.last().unwrap() < 300);
        }
    }

    #[test]
    fn forced_window() {
        let m = meta(97.0, 16, 64, 64, ColorKind::Gray8);
        let plans = plan_clips(&m, &SamplingConfig::default(), 3).unwrap();
        for p in plans {
            assert_eq!(p.frame_indices, (0..16).collect::<Vec<_>>());
        }
    }

    #[test]
    fn plans_are_deterministic_and_seed_sensitive() {
        let m = meta(30.0, 500, 64, 64, ColorKind::Gray8);
        let cfg = SamplingConfig { n_clips: 4, ..Default::default() };
        assert_eq!(plan_clips(&m, &cfg, 9).unwrap(), plan_clips(&m, &cfg, 9).unwrap());
        assert_ne!(plan_clips(&m, &cfg, 9).unwrap(), plan_clips(&m, &cfg, 10).unwrap());
    }

    #[test]
    fn too_short_video() {
        let m = meta(30.0, 15, 64, 64, ColorKind::Gray8);
        assert!(matches!(
            plan_clips(&m, &SamplingConfig::default(), 0),
            Err(SamplerError::VideoTooShort { frames: 15, clip_len: 16 })
        ));
    }

    #[test]
    fn constant_frames_give_constant_clip() {
        let v = volume(meta(30.0, 20, 97, 71, ColorKind::Gray8), |_, _, _, _| 77);
        let plan = &plan_clips(&v.meta, &SamplingConfig::default(), 0).unwrap()[0];
        let clip = extract_clip(&v, plan, 224).unwrap();
        assert_eq!(clip.shape(), [16, 224, 224, 3]);
        assert!(clip.data.iter().all(|&x| x == 77.0));
    }

    #[test]
    fn identity_geometry_is_bit_exact() {
        let v = volume(meta(30.0, 16, 224, 224, ColorKind::Rgb8), |t, y, x, c| {
            ((t * 17 + y * 3 + x * 5 + c * 41) % 256) as u8
        });
        let plan = ClipIndexPlan {
            video_id: "vid".into(),
            clip_index: 0,
            start_frame: 0,
            frame_indices: (0..16).collect(),
            seed: 0,
        };
        let clip = extract_clip(&v, &plan, 224).unwrap();
        let expected: Vec<f32> = v.pixels().iter().map(|&p| f32::from(p)).collect();
        assert_eq!(clip.data, expected);
    }

    #[test]
    fn centered_square_keeps_its_geometry() {
        // 448x448 with a white square over the middle half.
        let v = volume(meta(30.0, 16, 448, 448, ColorKind::Gray8), |_, y, x, _| {
            if (112..336).contains(&y) && (112..336).contains(&x) {
                255
            } else {
                0
            }
        });
        let plan = &plan_clips(&v.meta, &SamplingConfig::default(), 0).unwrap()[0];
        let clip = extract_clip(&v, plan, 224).unwrap();
        let f = clip.frame(0);
        let white: Vec<usize> = (0..224).filter(|&x| f[(112 * 224 + x) * 3] > 127.0).collect();
        assert!((*white.first().unwrap() as i64 - 56).abs() <= 1);
        assert!((*white.last().unwrap() as i64 - 167).abs() <= 1);
        let rows: Vec<usize> = (0..224).filter(|&y| f[(y * 224 + 112) * 3] > 127.0).collect();
        assert!((*rows.first().unwrap() as i64 - 56).abs() <= 1);
        assert!((*rows.last().unwrap() as i64 - 167).abs() <= 1);
    }

    #[test]
    fn out_of_range_plan() {
        let v = volume(meta(30.0, 16, 64, 64, ColorKind::Gray8), |_, _, _, _| 0);
        let plan = ClipIndexPlan {
            video_id: "vid".into(),
            clip_index: 0,
            start_frame: 0,
            frame_indices: vec![16],
            seed: 0,
        };
        assert!(matches!(
            extract_clip(&v, &plan, 224),
            Err(SamplerError::IndexOutOfRange { index: 16, .. })
        ));
    }

    fn small_clip(f: impl Fn(usize, usize, usize, usize) -> f32) -> ClipTensor {
        let size = 8;
        let mut data = Vec::new();
        for t in 0..2 {
            for y in 0..size {
                for x in 0..size {
                    for c in 0..3 {
                        data.push(f(t, y, x, c));
                    }
                }
            }
        }
        ClipTensor {
            data,
            frames: 2,
            size,
            normalized: false,
            plan: ClipIndexPlan {
                video_id: "v".into(),
                clip_index: 0,
                start_frame: 0,
                frame_indices: vec![0, 1],
                seed: 0,
            },
        }
    }

    #[test]
    fn normalize_cases() {
        let c = small_clip(|t, y, x, ch| ((t + y * 3 + x * 7 + ch) % 256) as f32);
        let n = normalize(&c, &NormStats::identity()).unwrap();
        for (a, b) in n.data.iter().zip(&c.data) {
            assert_eq!(*a, b / 255.0);
        }
        assert!(matches!(normalize(&n, &NormStats::identity()), Err(SamplerError::AlreadyNormalized)));

        let mu = [0.25f32, 0.5, 0.75];
        let constant = small_clip(|_, _, _, ch| 255.0 * mu[ch]);
        let stats = NormStats { mean: mu, std: [0.2, 0.3, 0.4] };
        let n = normalize(&constant, &stats).unwrap();
        assert!(n.data.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn augment_degenerate_and_symmetric() {
        let c = small_clip(|t, y, x, ch| (t * 5 + y * 11 + x * 3 + ch) as f32);
        let cfg = AugConfig { scale_min: 1.0, scale_max: 1.0, flip_prob: 0.0 };
        assert_eq!(augment(&c, &cfg, 123).data, c.data);

        let sym = small_clip(|t, y, x, ch| (t + y * 2 + x.min(7 - x) * 9 + ch) as f32);
        let flip = AugConfig { scale_min: 1.0, scale_max: 1.0, flip_prob: 1.0 };
        assert_eq!(augment(&sym, &flip, 5).data, sym.data);
    }

    #[test]
    fn augment_seeds() {
        let c = small_clip(|t, y, x, ch| ((t * 5 + y * 11 + x * x * 3 + ch) % 200) as f32);
        let cfg = AugConfig::default();
        assert_eq!(augment(&c, &cfg, 1), augment(&c, &cfg, 1));
        let distinct = (0..8u64).map(|s| augment(&c, &cfg, s).data).collect::<Vec<_>>();
        assert!(distinct.iter().any(|d| d != &distinct[0]));
    }

    #[test]
    fn class_weight_cases() {
        assert_eq!(class_weights(&[false, false, true, true]).unwrap(), vec![1.0; 4]);
        let w = class_weights(&[false, false, false, true]).unwrap();
        assert_eq!(w, vec![4.0 / 6.0, 4.0 / 6.0, 4.0 / 6.0, 2.0]);
        assert!(matches!(class_weights(&[true; 3]), Err(SamplerError::SingleClassDataset)));
    }
}
