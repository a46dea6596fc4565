//! Overlay removal, heartline crop and Doppler exclusion.
//!
//! Per-video order: Doppler score, exclusion check, static-pixel mask,
//! masking, bottom crop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ColorKind, FrameVolume};

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("temporal change is undefined for a single-frame video")]
    SingleFrameVideo,
    #[error("mask is {mask_w}x{mask_h} but frames are {frame_w}x{frame_h}")]
    ShapeMismatch {
        mask_w: usize,
        mask_h: usize,
        frame_w: usize,
        frame_h: usize,
    },
    #[error("cannot crop {crop} rows from a frame {height} rows high")]
    CropExceedsHeight { crop: usize, height: usize },
}

impl PreprocessError {
    pub fn kind(&self) -> &'static str {
        match self {
            PreprocessError::SingleFrameVideo => "single_frame_video",
            PreprocessError::ShapeMismatch { .. } => "shape_mismatch",
            PreprocessError::CropExceedsHeight { .. } => "crop_exceeds_height",
        }
    }
}

/// Per-pixel statistic used to decide whether a pixel is static.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeStatistic {
    /// Population variance of the channel-mean intensity over time.
    Variance,
    /// Largest absolute change of the channel-mean intensity between
    /// consecutive frames.
    MaxAbsDiff,
}

impl ChangeStatistic {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "variance" => Some(ChangeStatistic::Variance),
            "max_abs_diff" => Some(ChangeStatistic::MaxAbsDiff),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChangeStatistic::Variance => "variance",
            ChangeStatistic::MaxAbsDiff => "max_abs_diff",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub change_statistic: ChangeStatistic,
    /// Pixels whose statistic is at or below this are static overlay.
    /// Units are 8-bit intensity squared for `Variance`.
    pub var_threshold: f64,
    pub crop_px: usize,
    /// Hues strictly below this (degrees) count as red.
    pub red_hue_below: f64,
    /// Hues strictly above this (degrees) count as red.
    pub red_hue_above: f64,
    pub blue_hue_min: f64,
    pub blue_hue_max: f64,
    pub sat_min: f64,
    pub val_min: f64,
    pub tau_red: f64,
    pub tau_blue: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            change_statistic: ChangeStatistic::Variance,
            var_threshold: 2.0,
            crop_px: 45,
            red_hue_below: 20.0,
            red_hue_above: 340.0,
            blue_hue_min: 200.0,
            blue_hue_max: 260.0,
            sat_min: 0.3,
            val_min: 0.2,
            tau_red: 0.02,
            tau_blue: 0.02,
        }
    }
}

/// `true` marks static overlay pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiMask {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
}

impl UiMask {
    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        UiMask {
            width,
            height,
            mask: vec![value; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Intersection over union with another mask of the same shape.
    /// Two empty masks have IoU 1.
    pub fn iou(&self, other: &UiMask) -> f64 {
        assert_eq!(self.mask.len(), other.mask.len(), "mask shapes differ");
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.mask.iter().zip(&other.mask) {
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    pub fn crop_bottom(&self, n: usize) -> Result<UiMask, PreprocessError> {
        if n >= self.height {
            return Err(PreprocessError::CropExceedsHeight {
                crop: n,
                height: self.height,
            });
        }
        let height = self.height - n;
        Ok(UiMask {
            width: self.width,
            height,
            mask: self.mask[..self.width * height].to_vec(),
        })
    }
}

/// Channel sums per pixel for one frame (0..=255*channels).
fn channel_sums(frame: &[u8], channels: usize) -> impl Iterator<Item = u32> + '_ {
    frame
        .chunks_exact(channels)
        .map(|px| px.iter().map(|&c| u32::from(c)).sum())
}

/// Per-pixel temporal variance of channel-mean intensity.
///
/// Computed exactly in integers: n²c²·var = n·Σs² − (Σs)² where s is the
/// channel sum.
pub fn temporal_variance(v: &FrameVolume) -> Vec<f64> {
    let c = v.channels();
    let px = v.meta.width * v.meta.height;
    let mut sum = vec![0u64; px];
    let mut sum_sq = vec![0u64; px];
    for frame in v.frames() {
        for (i, s) in channel_sums(frame, c).enumerate() {
            let s = u64::from(s);
            sum[i] += s;
            sum_sq[i] += s * s;
        }
    }
    let n = v.meta.frame_count as u128;
    let denom = (n * n * (c * c) as u128) as f64;
    sum.iter()
        .zip(&sum_sq)
        .map(|(&s, &sq)| {
            let num = n * u128::from(sq) - u128::from(s) * u128::from(s);
            num as f64 / denom
        })
        .collect()
}

/// Per-pixel maximum absolute frame-to-frame change of channel-mean
/// intensity.
pub fn max_abs_diff(v: &FrameVolume) -> Vec<f64> {
    let c = v.channels();
    let px = v.meta.width * v.meta.height;
    let mut best = vec![0u32; px];
    let mut frames = v.frames();
    let Some(mut prev) = frames.next() else {
        return vec![0.0; px];
    };
    for frame in frames {
        for (i, (a, b)) in channel_sums(prev, c).zip(channel_sums(frame, c)).enumerate() {
            best[i] = best[i].max(a.abs_diff(b));
        }
        prev = frame;
    }
    best.into_iter().map(|d| f64::from(d) / c as f64).collect()
}

pub fn compute_ui_mask(v: &FrameVolume, var_threshold: f64) -> Result<UiMask, PreprocessError> {
    compute_ui_mask_with(v, ChangeStatistic::Variance, var_threshold)
}

pub fn compute_ui_mask_with(
    v: &FrameVolume,
    statistic: ChangeStatistic,
    threshold: f64,
) -> Result<UiMask, PreprocessError> {
    if v.meta.frame_count < 2 {
        return Err(PreprocessError::SingleFrameVideo);
    }
    let change = match statistic {
        ChangeStatistic::Variance => temporal_variance(v),
        ChangeStatistic::MaxAbsDiff => max_abs_diff(v),
    };
    Ok(UiMask {
        width: v.meta.width,
        height: v.meta.height,
        mask: change.into_iter().map(|s| s <= threshold).collect(),
    })
}

pub fn apply_ui_removal(v: &FrameVolume, m: &UiMask) -> Result<FrameVolume, PreprocessError> {
    if m.width != v.meta.width || m.height != v.meta.height {
        return Err(PreprocessError::ShapeMismatch {
            mask_w: m.width,
            mask_h: m.height,
            frame_w: v.meta.width,
            frame_h: v.meta.height,
        });
    }
    let c = v.channels();
    let frame_len = v.meta.frame_len();
    let mut out = v.clone();
    for frame in out.pixels_mut().chunks_exact_mut(frame_len) {
        for (px, &masked) in frame.chunks_exact_mut(c).zip(&m.mask) {
            if masked {
                px.fill(0);
            }
        }
    }
    Ok(out)
}

pub fn crop_bottom(v: &FrameVolume, n: usize) -> Result<FrameVolume, PreprocessError> {
    let height = v.meta.height;
    if n >= height {
        return Err(PreprocessError::CropExceedsHeight { crop: n, height });
    }
    if n == 0 {
        return Ok(v.clone());
    }
    let row = v.meta.width * v.channels();
    let keep = (height - n) * row;
    let mut pixels = Vec::with_capacity(keep * v.meta.frame_count);
    for frame in v.frames() {
        pixels.extend_from_slice(&frame[..keep]);
    }
    let mut meta = v.meta.clone();
    meta.height = height - n;
    Ok(FrameVolume::new(meta, pixels).expect("cropped size is consistent"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerVerdict {
    pub red_fraction: f64,
    pub blue_fraction: f64,
    pub excluded: bool,
}

/// Hue in degrees [0, 360), saturation and value in [0, 1].
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let value = f64::from(max) / 255.0;
    if max == 0 {
        return (0.0, 0.0, 0.0);
    }
    let delta = f64::from(max - min);
    let saturation = delta / f64::from(max);
    if max == min {
        return (0.0, 0.0, value);
    }
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    let sector = if max as f64 == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max as f64 == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    (sector * 60.0, saturation, value)
}

/// Fractions of colored pixels pooled over every frame. Gray videos
/// score zero.
pub fn doppler_score(v: &FrameVolume, cfg: &PreprocessConfig) -> (f64, f64) {
    if v.meta.color == ColorKind::Gray8 {
        return (0.0, 0.0);
    }
    let (mut red, mut blue) = (0u64, 0u64);
    for px in v.pixels().chunks_exact(3) {
        let (h, s, val) = rgb_to_hsv(px[0], px[1], px[2]);
        if s < cfg.sat_min || val < cfg.val_min {
            continue;
        }
        if h < cfg.red_hue_below || h > cfg.red_hue_above {
            red += 1;
        } else if (cfg.blue_hue_min..=cfg.blue_hue_max).contains(&h) {
            blue += 1;
        }
    }
    let total = (v.meta.width * v.meta.height * v.meta.frame_count) as f64;
    (red as f64 / total, blue as f64 / total)
}

pub fn doppler_verdict(v: &FrameVolume, cfg: &PreprocessConfig) -> DopplerVerdict {
    let (red_fraction, blue_fraction) = doppler_score(v, cfg);
    DopplerVerdict {
        red_fraction,
        blue_fraction,
        excluded: red_fraction > cfg.tau_red || blue_fraction > cfg.tau_blue,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreprocessOutcome {
    Processed {
        volume: FrameVolume,
        verdict: DopplerVerdict,
        masked_pixels: usize,
    },
    Excluded(DopplerVerdict),
}

pub fn preprocess_video(
    v: &FrameVolume,
    cfg: &PreprocessConfig,
) -> Result<PreprocessOutcome, PreprocessError> {
    let verdict = doppler_verdict(v, cfg);
    if verdict.excluded {
        return Ok(PreprocessOutcome::Excluded(verdict));
    }
    let mask = compute_ui_mask_with(v, cfg.change_statistic, cfg.var_threshold)?;
    let cleaned = apply_ui_removal(v, &mask)?;
    let volume = crop_bottom(&cleaned, cfg.crop_px)?;
    Ok(PreprocessOutcome::Processed {
        volume,
        verdict,
        masked_pixels: mask.count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Site, VideoMeta};
    use proptest::prelude::*;

    fn meta(w: usize, h: usize, frames: usize, color: ColorKind) -> VideoMeta {
        VideoMeta {
            video_id: "v".into(),
            individual_id: "i".into(),
            site: Site::CcaL,
            fps: 30.0,
            frame_count: frames,
            width: w,
            height: h,
            color,
        }
    }

    fn from_fn(m: VideoMeta, f: impl Fn(usize, usize, usize, usize) -> u8) -> FrameVolume {
        let c = m.color.channels();
        let mut px = Vec::with_capacity(m.frame_len() * m.frame_count);
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
    fn constant_video_is_all_static() {
        let v = from_fn(meta(8, 6, 5, ColorKind::Rgb8), |_, y, x, c| (y * 10 + x + c) as u8);
        let m = compute_ui_mask(&v, 2.0).unwrap();
        assert_eq!(m.count(), 48);
    }

    #[test]
    fn alternating_pixel_is_dynamic() {
        let v = from_fn(meta(4, 4, 6, ColorKind::Gray8), |t, y, x, _| {
            if (x, y) == (1, 2) {
                if t % 2 == 0 {
                    0
                } else {
                    255
                }
            } else {
                9
            }
        });
        let m = compute_ui_mask(&v, 10.0).unwrap();
        assert!(!m.get(1, 2));
        assert_eq!(m.count(), 15);
        // Exact population variance of alternating 0/255 is 127.5².
        let var = temporal_variance(&v);
        assert_eq!(var[2 * 4 + 1], 127.5 * 127.5);
        let mad = compute_ui_mask_with(&v, ChangeStatistic::MaxAbsDiff, 10.0).unwrap();
        assert_eq!(mad, m);
    }

    #[test]
    fn single_frame_rejected() {
        let v = from_fn(meta(4, 4, 1, ColorKind::Gray8), |_, _, _, _| 1);
        assert_eq!(compute_ui_mask(&v, 2.0), Err(PreprocessError::SingleFrameVideo));
    }

    #[test]
    fn removal_identity_and_annihilation() {
        let v = from_fn(meta(5, 4, 3, ColorKind::Rgb8), |t, y, x, c| (t + y * 7 + x * 3 + c + 1) as u8);
        let none = UiMask::filled(5, 4, false);
        assert_eq!(apply_ui_removal(&v, &none).unwrap(), v);
        let all = UiMask::filled(5, 4, true);
        let zeroed = apply_ui_removal(&v, &all).unwrap();
        assert!(zeroed.pixels().iter().all(|&p| p == 0));
        assert_eq!(zeroed.meta, v.meta);
        assert!(matches!(
            apply_ui_removal(&v, &UiMask::filled(4, 4, true)),
            Err(PreprocessError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn crop_arithmetic() {
        let v = from_fn(meta(3, 224, 2, ColorKind::Gray8), |t, y, x, _| (t + y + x) as u8);
        let c = crop_bottom(&v, 45).unwrap();
        assert_eq!(c.meta.height, 179);
        for t in 0..2 {
            assert_eq!(c.frame(t), &v.frame(t)[..3 * 179]);
        }
        assert_eq!(crop_bottom(&v, 0).unwrap(), v);
        let short = from_fn(meta(3, 40, 2, ColorKind::Gray8), |_, _, _, _| 0);
        assert_eq!(
            crop_bottom(&short, 45),
            Err(PreprocessError::CropExceedsHeight { crop: 45, height: 40 })
        );
    }

    #[test]
    fn hsv_reference_points() {
        assert_eq!(rgb_to_hsv(255, 0, 0), (0.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv(0, 255, 0), (120.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv(0, 0, 255), (240.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv(128, 128, 128).1, 0.0);
        let (h, _, _) = rgb_to_hsv(255, 0, 10);
        assert!(h > 340.0);
    }

    #[test]
    fn doppler_gray_and_saturated() {
        let cfg = PreprocessConfig::default();
        let gray = from_fn(meta(8, 8, 2, ColorKind::Rgb8), |_, _, _, _| 128);
        assert_eq!(doppler_score(&gray, &cfg), (0.0, 0.0));
        let blue = from_fn(meta(8, 8, 2, ColorKind::Rgb8), |_, _, _, c| if c == 2 { 255 } else { 0 });
        assert_eq!(doppler_score(&blue, &cfg), (0.0, 1.0));
        let g8 = from_fn(meta(8, 8, 2, ColorKind::Gray8), |_, _, _, _| 255);
        assert!(!doppler_verdict(&g8, &cfg).excluded);
    }

    #[test]
    fn excluded_video_short_circuits() {
        let cfg = PreprocessConfig::default();
        // 20% red patch.
        let v = from_fn(meta(10, 100, 3, ColorKind::Rgb8), |t, y, _, c| {
            if y < 20 {
                if c == 0 {
                    200 + t as u8
                } else {
                    0
                }
            } else {
                90
            }
        });
        match preprocess_video(&v, &cfg).unwrap() {
            PreprocessOutcome::Excluded(verdict) => {
                assert!((verdict.red_fraction - 0.2).abs() < 1e-12);
                assert!(verdict.excluded);
            }
            other => panic!("expected exclusion, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn removal_is_idempotent(bits in proptest::collection::vec(any::<bool>(), 64), seed in any::<u8>()) {
            let v = from_fn(meta(8, 8, 3, ColorKind::Gray8), |t, y, x, _| {
                (t * 31 + y * 7 + x * 13 + seed as usize) as u8
            });
            let m = UiMask { width: 8, height: 8, mask: bits };
            let once = apply_ui_removal(&v, &m).unwrap();
            prop_assert_eq!(apply_ui_removal(&once, &m).unwrap(), once);
        }

        #[test]
        fn crop_and_mask_commute(bits in proptest::collection::vec(any::<bool>(), 80), n in 0usize..10) {
            let v = from_fn(meta(8, 10, 2, ColorKind::Rgb8), |t, y, x, c| (t + y * 5 + x * 3 + c) as u8);
            let m = UiMask { width: 8, height: 10, mask: bits };
            let a = crop_bottom(&apply_ui_removal(&v, &m).unwrap(), n).unwrap();
            let b = apply_ui_removal(&crop_bottom(&v, n).unwrap(), &m.crop_bottom(n).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
