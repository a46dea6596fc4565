//! Synthetic ultrasound-like videos and cohorts with full ground truth.
//!
//! Videos are box-filtered speckle whose contrast depends on the texture
//! class, with optional static UI glyphs, a heartline band at the bottom and
//! a saturated colour-flow patch. Every pixel outside the static UI is
//! guaranteed to change over time.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::VdLabel;
use crate::ingest::{dicom, frameseq, ColorKind, FrameVolume, IngestError, Site, VideoMeta};
use crate::preprocess::UiMask;
use crate::seed;
use crate::stats::cohort::{Continuous, Event, Flag, IndividualRecord, Sex};
use crate::stats::Group;

/// Rows at the top reserved for overlay glyphs.
const GLYPH_ZONE: usize = 12;
/// Columns on the right reserved for the depth scale.
const SCALE_ZONE: usize = 6;
/// Speckle amplitude at contrast 1.0 (sd of the filtered noise is ~25).
const SPECKLE_GAIN: f64 = 260.0;
/// Contrast gap above which the builtin features separate the classes.
pub const SEPARABILITY_MARGIN: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DopplerHue {
    Red,
    Blue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopplerSpec {
    /// Fraction of the frame covered, in [0, 1).
    pub area_fraction: f64,
    pub hue: DopplerHue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlaySpec {
    pub glyphs: usize,
    pub depth_scale: bool,
    /// Height of the heartline band at the bottom; 0 for none.
    pub band_height: usize,
    /// Draw a sweeping ECG trace inside the band.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthVideoSpec {
    pub video_id: String,
    pub individual_id: String,
    pub site: Site,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub frame_count: usize,
    pub color: ColorKind,
    pub overlay: Option<OverlaySpec>,
    pub doppler: Option<DopplerSpec>,
    pub texture_class: u8,
    /// Speckle contrast for class 0 and class 1.
    pub contrast: [f64; 2],
    /// Minimum temporal variance of every non-UI pixel.
    pub var_floor: f64,
}

impl Default for SynthVideoSpec {
    fn default() -> Self {
        SynthVideoSpec {
            video_id: "synth".into(),
            individual_id: "synth".into(),
            site: Site::CcaL,
            width: 128,
            height: 128,
            fps: 15.0,
            frame_count: 48,
            color: ColorKind::Gray8,
            overlay: None,
            doppler: None,
            texture_class: 0,
            contrast: [0.5, 1.0],
            var_floor: 8.0,
        }
    }
}

impl SynthVideoSpec {
    pub fn meta(&self) -> VideoMeta {
        VideoMeta {
            video_id: self.video_id.clone(),
            individual_id: self.individual_id.clone(),
            site: self.site,
            fps: self.fps,
            frame_count: self.frame_count,
            width: self.width,
            height: self.height,
            color: self.color,
        }
    }

    fn band_height(&self) -> usize {
        self.overlay.as_ref().map_or(0, |o| o.band_height)
    }

    pub fn patch_pixels(&self) -> usize {
        self.doppler
            .as_ref()
            .map_or(0, |d| (d.area_fraction * (self.width * self.height) as f64).round() as usize)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width < 64 || self.height < 64 {
            return Err(invalid(format!("frame {}x{} smaller than 64", self.width, self.height)));
        }
        if self.frame_count < 2 {
            return Err(invalid("need at least two frames"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(invalid("fps must be positive"));
        }
        if self.texture_class > 1 {
            return Err(invalid("texture_class must be 0 or 1"));
        }
        if self.contrast.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(invalid("contrast must be positive"));
        }
        if !(self.var_floor.is_finite() && self.var_floor >= 0.0) {
            return Err(invalid("var_floor must be non-negative"));
        }
        if self.band_height() + GLYPH_ZONE + 8 > self.height {
            return Err(invalid("heartline band leaves no image area"));
        }
        if let Some(d) = &self.doppler {
            if !(0.0..1.0).contains(&d.area_fraction) {
                return Err(invalid("doppler area fraction outside [0, 1)"));
            }
            if self.color == ColorKind::Gray8 {
                return Err(invalid("doppler patch needs an RGB video"));
            }
            let (rw, rh) = self.patch_region();
            let side = patch_side(self.patch_pixels());
            if side > rw || self.patch_pixels().div_ceil(side.max(1)) > rh {
                return Err(invalid("doppler patch does not fit the image area"));
            }
        }
        Ok(())
    }

    /// Width and height of the area a patch may occupy (below the glyphs,
    /// left of the scale, above the band).
    fn patch_region(&self) -> (usize, usize) {
        (
            self.width - SCALE_ZONE,
            self.height - self.band_height() - GLYPH_ZONE - 2,
        )
    }
}

fn patch_side(pixels: usize) -> usize {
    (pixels as f64).sqrt().ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ui_mask: UiMask,
    /// Patch coverage exceeds the default exclusion threshold.
    pub doppler_flag: bool,
    pub patch_fraction: f64,
    pub texture_class: u8,
    pub seed: u64,
}

/// Exclusion threshold the ground-truth flag refers to.
pub const DOPPLER_FLAG_THRESHOLD: f64 = 0.02;

struct Canvas {
    width: usize,
    height: usize,
    frames: usize,
    /// One gray value per pixel per frame, plus an optional colour.
    gray: Vec<u8>,
    color: Vec<Option<[u8; 3]>>,
    ui: Vec<bool>,
}

impl Canvas {
    fn at(&self, t: usize, x: usize, y: usize) -> usize {
        (t * self.height + y) * self.width + x
    }

    /// Sets a pixel to the same value in every frame.
    fn set_static(&mut self, x: usize, y: usize, v: u8) {
        for t in 0..self.frames {
            let i = self.at(t, x, y);
            self.gray[i] = v;
            self.color[i] = None;
        }
        self.ui[y * self.width + x] = true;
    }
}

fn box_filter(noise: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let yy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                    let xx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                    acc += noise[yy * w + xx];
                }
            }
            out[y * w + x] = acc / 9.0;
        }
    }
    out
}

fn variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Stylised PQRST shape over one period, in [-1, 1].
fn ecg(phase: f64) -> f64 {
    let bump = |c: f64, w: f64| (-((phase - c) / w).powi(2)).exp();
    0.15 * bump(0.2, 0.04) - 0.15 * bump(0.33, 0.01) + bump(0.36, 0.012) - 0.25 * bump(0.39, 0.012)
        + 0.3 * bump(0.6, 0.06)
}

pub fn gen_video(spec: &SynthVideoSpec, seed: u64) -> Result<(FrameVolume, GroundTruth), SynthError> {
    spec.validate()?;
    let (w, h, n) = (spec.width, spec.height, spec.frame_count);
    let mut canvas = Canvas {
        width: w,
        height: h,
        frames: n,
        gray: vec![0; w * h * n],
        color: vec![None; w * h * n],
        ui: vec![false; w * h],
    };

    // Speckle: a darker horizontal lumen band across the middle.
    let contrast = spec.contrast[spec.texture_class as usize];
    let lumen = (h * 2 / 5, h * 11 / 20);
    let mut rng = seed::derived_rng(seed, &[b"speckle"]);
    let mut noise = vec![0.0; w * h];
    for t in 0..n {
        noise.iter_mut().for_each(|v| *v = rng.gen::<f64>());
        let filtered = box_filter(&noise, w, h);
        for y in 0..h {
            let base = if (lumen.0..lumen.1).contains(&y) { 45.0 } else { 110.0 };
            for x in 0..w {
                let v = base + contrast * SPECKLE_GAIN * (filtered[y * w + x] - 0.5);
                let i = canvas.at(t, x, y);
                canvas.gray[i] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }

    // Colour-flow patch: exact pixel count, raster-filled from a random
    // corner, full saturation, value varying per frame.
    let patch_pixels = spec.patch_pixels();
    if let Some(d) = &spec.doppler {
        let mut rng = seed::derived_rng(seed, &[b"doppler"]);
        let side = patch_side(patch_pixels).max(1);
        let rows = patch_pixels.div_ceil(side);
        let (rw, rh) = spec.patch_region();
        let x0 = rng.gen_range(0..=rw - side);
        let y0 = GLYPH_ZONE + 2 + rng.gen_range(0..=rh - rows);
        for k in 0..patch_pixels {
            let (x, y) = (x0 + k % side, y0 + k / side);
            for t in 0..n {
                let v: u8 = rng.gen_range(128..=255);
                let i = canvas.at(t, x, y);
                canvas.color[i] = Some(match d.hue {
                    DopplerHue::Red => [v, 0, 0],
                    DopplerHue::Blue => [0, 0, v],
                });
            }
        }
    }

    // Variance floor on the channel-mean intensity; anything too still
    // gets an alternating pattern so it cannot pass for static UI.
    if spec.var_floor > 0.0 {
        let channel_mean = |g: u8, c: Option<[u8; 3]>| match (spec.color, c) {
            (ColorKind::Rgb8, Some(c)) => c.iter().map(|&v| f64::from(v)).sum::<f64>() / 3.0,
            _ => f64::from(g),
        };
        let d = (spec.var_floor.sqrt() * (n as f64 / (n - n % 2) as f64)).ceil() + 1.0;
        for y in 0..h {
            for x in 0..w {
                let series = (0..n).map(|t| {
                    let i = canvas.at(t, x, y);
                    channel_mean(canvas.gray[i], canvas.color[i])
                });
                if variance(series) >= spec.var_floor {
                    continue;
                }
                for t in 0..n {
                    let i = canvas.at(t, x, y);
                    let delta = if t % 2 == 0 { d } else { -d };
                    match &mut canvas.color[i] {
                        // one lit channel: triple the swing to keep the mean's
                        Some(c) => c.iter_mut().filter(|v| **v > 0).for_each(|v| *v = (190.0 + 3.0 * delta) as u8),
                        None => canvas.gray[i] = (110.0 + delta) as u8,
                    }
                }
            }
        }
    }

    if let Some(o) = &spec.overlay {
        let mut rng = seed::derived_rng(seed, &[b"overlay"]);
        for _ in 0..o.glyphs {
            let gw = rng.gen_range(3..=8);
            let gh = rng.gen_range(4..=8);
            let gx = rng.gen_range(0..w - SCALE_ZONE - gw);
            let gy = rng.gen_range(1..GLYPH_ZONE - gh + 1);
            let v: u8 = rng.gen_range(180..=255);
            for y in gy..gy + gh {
                for x in gx..gx + gw {
                    canvas.set_static(x, y, v);
                }
            }
        }
        if o.depth_scale {
            for y in GLYPH_ZONE..h - o.band_height {
                canvas.set_static(w - 3, y, 160);
                if y % 8 == 0 {
                    canvas.set_static(w - 4, y, 160);
                    canvas.set_static(w - 5, y, 160);
                }
            }
        }
        if o.band_height > 0 {
            for y in h - o.band_height..h {
                for x in 0..w {
                    canvas.set_static(x, y, 8);
                }
            }
            if o.trace {
                let top = h - o.band_height;
                let mid = top as f64 + o.band_height as f64 / 2.0;
                let amp = (o.band_height as f64 / 2.0 - 2.0).max(1.0);
                let window = w / 4;
                let step = 3;
                let period = (w / 2) as f64;
                for t in 0..n {
                    let head = (t * step) % w;
                    for back in 0..window {
                        let x = (head + w - back) % w;
                        let y = (mid - amp * ecg((x as f64 % period) / period)).round() as usize;
                        let y = y.clamp(top, h - 1);
                        let i = canvas.at(t, x, y);
                        canvas.gray[i] = 220;
                        canvas.color[i] = Some([40, 220, 40]);
                    }
                }
                // The trace makes its pixels non-static; only pixels never
                // touched by it count as UI.
                for y in top..h {
                    for x in 0..w {
                        let first = canvas.at(0, x, y);
                        if (1..n).any(|t| {
                            let i = canvas.at(t, x, y);
                            canvas.gray[i] != canvas.gray[first] || canvas.color[i] != canvas.color[first]
                        }) {
                            canvas.ui[y * w + x] = false;
                        }
                    }
                }
            }
        }
    }

    let pixels = match spec.color {
        ColorKind::Gray8 => canvas.gray,
        ColorKind::Rgb8 => canvas
            .gray
            .iter()
            .zip(&canvas.color)
            .flat_map(|(&g, c)| c.unwrap_or([g, g, g]))
            .collect(),
    };
    let volume = FrameVolume::new(spec.meta(), pixels).expect("generator sizes are consistent");
    let patch_fraction = patch_pixels as f64 / (w * h) as f64;
    Ok((
        volume,
        GroundTruth {
            ui_mask: UiMask {
                width: w,
                height: h,
                mask: canvas.ui,
            },
            doppler_flag: patch_fraction > DOPPLER_FLAG_THRESHOLD,
            patch_fraction,
            texture_class: spec.texture_class,
            seed,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VideoFormat {
    Dicom,
    FrameSequence,
}

/// Writes the video into `videos/` and its sidecars (`<id>.mask.png`,
/// `<id>.truth`) into `truth/` under `root`. Returns the video path.
pub fn write_video(
    volume: &FrameVolume,
    truth: &GroundTruth,
    root: &Path,
    format: VideoFormat,
) -> Result<PathBuf, IngestError> {
    let werr = |path: &Path, e: std::io::Error| IngestError::Write {
        path: path.to_path_buf(),
        source: e,
    };
    let videos = root.join("videos");
    let truth_dir = root.join("truth");
    for d in [&videos, &truth_dir] {
        std::fs::create_dir_all(d).map_err(|e| werr(d, e))?;
    }
    let id = &volume.meta.video_id;
    let path = match format {
        VideoFormat::Dicom => {
            let p = videos.join(format!("{id}.dcm"));
            dicom::write(volume, &p)?;
            p
        }
        VideoFormat::FrameSequence => {
            let p = videos.join(id);
            frameseq::write(volume, &p)?;
            p
        }
    };
    let mask_path = truth_dir.join(format!("{id}.mask.png"));
    let m = &truth.ui_mask;
    let img = image::GrayImage::from_raw(
        m.width as u32,
        m.height as u32,
        m.mask.iter().map(|&b| if b { 255 } else { 0 }).collect(),
    )
    .expect("mask size");
    img.save(&mask_path)
        .map_err(|e| werr(&mask_path, std::io::Error::other(e.to_string())))?;
    let truth_path = truth_dir.join(format!("{id}.truth"));
    std::fs::write(&truth_path, render_truth(&volume.meta, truth)).map_err(|e| werr(&truth_path, e))?;
    Ok(path)
}

pub fn render_truth(meta: &VideoMeta, truth: &GroundTruth) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "video_id = {}", meta.video_id);
    let _ = writeln!(s, "individual_id = {}", meta.individual_id);
    let _ = writeln!(s, "texture_class = {}", truth.texture_class);
    let _ = writeln!(s, "doppler_flag = {}", truth.doppler_flag);
    let _ = writeln!(s, "patch_fraction = {}", truth.patch_fraction);
    let _ = writeln!(s, "ui_pixels = {}", truth.ui_mask.count());
    let _ = writeln!(s, "seed = {}", truth.seed);
    s
}

/// Reads a mask sidecar back.
pub fn read_mask(path: &Path) -> Result<UiMask, IngestError> {
    let img = image::open(path)
        .map_err(|e| IngestError::CorruptHeader(format!("{}: {e}", path.display())))?
        .into_luma8();
    Ok(UiMask {
        width: img.width() as usize,
        height: img.height() as usize,
        mask: img.pixels().map(|p| p.0[0] > 127).collect(),
    })
}

// ---------------------------------------------------------------- cohorts

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dist {
    pub mean: f64,
    pub sd: f64,
    /// Probability the value is left empty (optional variables only).
    pub missing: f64,
}

impl Dist {
    pub const fn new(mean: f64, sd: f64, missing: f64) -> Self {
        Dist { mean, sd, missing }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    /// Indexed by [`Flag::index`].
    pub flag_prevalence: [f64; 10],
    /// Indexed like [`Continuous::ALL`].
    pub continuous: [Dist; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventPlan {
    /// Expected fraction of individuals with the event.
    pub rate: f64,
    /// Expected share of events falling on planted-HighVD individuals.
    pub high_vd_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCohortSpec {
    pub n_individuals: usize,
    pub videos_per_individual: usize,
    pub dx_prevalence: f64,
    /// Probability the planted texture disagrees with the diagnosis.
    pub discordance: f64,
    /// Indexed by [`Group::index`].
    pub groups: [GroupParams; 4],
    /// Indexed by [`Event::index`].
    pub events: [EventPlan; 4],
    pub rgb_fraction: f64,
    pub overlay_rate: f64,
    pub doppler_rate: f64,
    pub doppler_fraction: f64,
    pub video: SynthVideoSpec,
}

impl Default for SynthCohortSpec {
    fn default() -> Self {
        let base = GroupParams {
            flag_prevalence: [0.1; 10],
            continuous: [
                Dist::new(52.0, 9.0, 0.0),
                Dist::new(4.0, 2.0, 0.1),
                Dist::new(90.0, 40.0, 0.1),
                Dist::new(1.0, 1.2, 0.0),
                Dist::new(4.0, 2.5, 0.05),
            ],
        };
        let mut groups = [base.clone(), base.clone(), base.clone(), base];
        for g in Group::ALL {
            let p = &mut groups[g.index()];
            let dx = matches!(g, Group::DxPosHighVd | Group::DxPosLowVd);
            p.flag_prevalence[Flag::AntihypertensiveUse.index()] = if dx { 0.6 } else { 0.05 };
            p.flag_prevalence[Flag::DiabetesT2.index()] = if dx { 0.15 } else { 0.02 };
            if dx {
                p.continuous[0].mean = 60.0;
            }
            if g.high_vd() {
                p.continuous[3].mean += 1.0;
                p.continuous[4].mean += 2.0;
            }
        }
        // Non-hypertensive individuals with high visual damage carry the
        // planted diabetes excess (4.9x the baseline group).
        groups[Group::DxNegHighVd.index()].flag_prevalence[Flag::DiabetesT2.index()] = 0.098;
        SynthCohortSpec {
            n_individuals: 100,
            videos_per_individual: 2,
            dx_prevalence: 0.5,
            discordance: 0.1,
            groups,
            events: [EventPlan { rate: 0.06, high_vd_share: 0.8 }; 4],
            rgb_fraction: 0.5,
            overlay_rate: 0.8,
            doppler_rate: 0.0,
            doppler_fraction: 0.1,
            video: SynthVideoSpec::default(),
        }
    }
}

impl SynthCohortSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_individuals == 0 {
            return Err(invalid("n_individuals must be at least 1"));
        }
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(invalid(format!("{name} = {p} is not a probability")))
            }
        };
        prob("dx_prevalence", self.dx_prevalence)?;
        prob("discordance", self.discordance)?;
        prob("rgb_fraction", self.rgb_fraction)?;
        prob("overlay_rate", self.overlay_rate)?;
        prob("doppler_rate", self.doppler_rate)?;
        for g in &self.groups {
            for &p in &g.flag_prevalence {
                prob("flag prevalence", p)?;
            }
            for (i, d) in g.continuous.iter().enumerate() {
                prob("missing rate", d.missing)?;
                if !(d.mean.is_finite() && d.sd.is_finite() && d.sd >= 0.0) {
                    return Err(invalid("distribution parameters must be finite, sd >= 0"));
                }
                let required = matches!(Continuous::ALL[i], Continuous::Age | Continuous::PlaqueCount);
                if required && d.missing > 0.0 {
                    return Err(invalid(format!("{} cannot be missing", Continuous::ALL[i].column())));
                }
            }
        }
        for e in &self.events {
            prob("event rate", e.rate)?;
            prob("high_vd_share", e.high_vd_share)?;
        }
        if self.doppler_rate > 0.0 && self.rgb_fraction == 0.0 {
            return Err(invalid("doppler patches need RGB videos"));
        }
        self.video.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedIndividual {
    pub individual_id: String,
    pub discordant: bool,
    pub texture_class: u8,
    pub group: Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedVideo {
    pub spec: SynthVideoSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCohort {
    pub individuals: Vec<IndividualRecord>,
    pub planted: Vec<PlantedIndividual>,
    pub videos: Vec<PlannedVideo>,
}

impl SynthCohort {
    pub fn planted_labels(&self) -> BTreeMap<String, VdLabel> {
        self.planted
            .iter()
            .map(|p| (p.individual_id.clone(), VdLabel::from_high(p.texture_class == 1)))
            .collect()
    }
}

fn draw(rng: &mut impl Rng, d: &Dist) -> Option<f64> {
    if d.missing > 0.0 && rng.gen_bool(d.missing) {
        return None;
    }
    let v = if d.sd > 0.0 {
        Normal::new(d.mean, d.sd).expect("validated").sample(rng)
    } else {
        d.mean
    };
    Some(v)
}

fn two_dp(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub fn gen_cohort(spec: &SynthCohortSpec, seed: u64) -> Result<SynthCohort, SynthError> {
    spec.validate()?;
    let width = (spec.n_individuals - 1).to_string().len().max(4);
    let mut individuals = Vec::with_capacity(spec.n_individuals);
    let mut planted = Vec::with_capacity(spec.n_individuals);
    for i in 0..spec.n_individuals {
        let id = format!("ind{i:0width$}");
        let mut rng = seed::derived_rng(seed, &[b"individual", id.as_bytes()]);
        let dx = rng.gen_bool(spec.dx_prevalence);
        let discordant = rng.gen_bool(spec.discordance);
        let texture = u8::from(dx ^ discordant);
        let group = Group::of(dx, VdLabel::from_high(texture == 1));
        let params = &spec.groups[group.index()];
        let sex = if rng.gen_bool(0.5) { Sex::Female } else { Sex::Male };
        let age = two_dp(draw(&mut rng, &params.continuous[0]).unwrap_or(params.continuous[0].mean).clamp(18.0, 100.0));
        let mut r = IndividualRecord::new(&id, age, sex, dx);
        for f in Flag::ALL {
            r.set_flag(f, rng.gen_bool(params.flag_prevalence[f.index()]));
        }
        let positive = |v: Option<f64>| v.map(|v| two_dp(v.max(0.0)));
        r.troponin_i = positive(draw(&mut rng, &params.continuous[1]));
        r.nt_probnp = positive(draw(&mut rng, &params.continuous[2]));
        r.plaque_count = draw(&mut rng, &params.continuous[3]).unwrap_or(0.0).round().max(0.0) as u32;
        r.score2 = positive(draw(&mut rng, &params.continuous[4]));
        individuals.push(r);
        planted.push(PlantedIndividual {
            individual_id: id,
            discordant,
            texture_class: texture,
            group,
        });
    }

    // Events: per-individual probabilities chosen so the expected share on
    // HighVD individuals equals the plan.
    let n = spec.n_individuals as f64;
    let n_high = planted.iter().filter(|p| p.texture_class == 1).count() as f64;
    for (r, p) in individuals.iter_mut().zip(&planted) {
        let mut rng = seed::derived_rng(seed, &[b"events", r.individual_id.as_bytes()]);
        for e in Event::ALL {
            let plan = spec.events[e.index()];
            let (share, stratum) = if p.texture_class == 1 {
                (plan.high_vd_share, n_high)
            } else {
                (1.0 - plan.high_vd_share, n - n_high)
            };
            let prob = if stratum > 0.0 { (plan.rate * share * n / stratum).min(1.0) } else { 0.0 };
            r.set_event(e, rng.gen_bool(prob));
        }
    }

    let sites = &Site::ALL[..6];
    let mut videos = Vec::new();
    for p in &planted {
        for k in 0..spec.videos_per_individual {
            let video_id = format!("{}_v{k}", p.individual_id);
            let vseed = seed::derive(seed, &[b"video", video_id.as_bytes()]);
            let mut rng = seed::derived_rng(vseed, &[b"layout"]);
            let color = if rng.gen_bool(spec.rgb_fraction) { ColorKind::Rgb8 } else { ColorKind::Gray8 };
            let overlay = rng.gen_bool(spec.overlay_rate).then(|| OverlaySpec {
                glyphs: rng.gen_range(2..=6),
                depth_scale: rng.gen_bool(0.5),
                band_height: rng.gen_range(24..=44).min(spec.video.height / 3),
                trace: rng.gen_bool(0.5),
            });
            let doppler = (color == ColorKind::Rgb8 && rng.gen_bool(spec.doppler_rate)).then(|| DopplerSpec {
                area_fraction: spec.doppler_fraction,
                hue: if rng.gen_bool(0.5) { DopplerHue::Red } else { DopplerHue::Blue },
            });
            let vspec = SynthVideoSpec {
                video_id,
                individual_id: p.individual_id.clone(),
                site: sites[k % sites.len()],
                color,
                overlay,
                doppler,
                texture_class: p.texture_class,
                ..spec.video.clone()
            };
            vspec.validate()?;
            videos.push(PlannedVideo { spec: vspec, seed: vseed });
        }
    }
    Ok(SynthCohort {
        individuals,
        planted,
        videos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{compute_ui_mask, doppler_verdict, temporal_variance, PreprocessConfig};

    fn spec() -> SynthVideoSpec {
        SynthVideoSpec {
            width: 64,
            height: 80,
            frame_count: 12,
            ..SynthVideoSpec::default()
        }
    }

    #[test]
    fn plain_video_has_no_ui_and_no_doppler() {
        let (v, gt) = gen_video(&spec(), 3).unwrap();
        assert_eq!(gt.ui_mask.count(), 0);
        assert!(!gt.doppler_flag);
        assert!(temporal_variance(&v).iter().all(|&x| x >= 8.0));
    }

    #[test]
    fn deterministic() {
        let s = SynthVideoSpec {
            color: ColorKind::Rgb8,
            overlay: Some(OverlaySpec { glyphs: 3, depth_scale: true, band_height: 20, trace: true }),
            ..spec()
        };
        assert_eq!(gen_video(&s, 9).unwrap(), gen_video(&s, 9).unwrap());
        assert_ne!(gen_video(&s, 9).unwrap().0, gen_video(&s, 10).unwrap().0);
    }

    #[test]
    fn detected_mask_matches_truth() {
        for color in [ColorKind::Gray8, ColorKind::Rgb8] {
            let s = SynthVideoSpec {
                color,
                overlay: Some(OverlaySpec { glyphs: 5, depth_scale: true, band_height: 24, trace: true }),
                ..spec()
            };
            let (v, gt) = gen_video(&s, 1).unwrap();
            assert!(gt.ui_mask.count() > 64 * 20);
            let m = compute_ui_mask(&v, 2.0).unwrap();
            assert_eq!(m.iou(&gt.ui_mask), 1.0);
        }
    }

    #[test]
    fn doppler_patch_fraction_is_exact() {
        let s = SynthVideoSpec {
            color: ColorKind::Rgb8,
            doppler: Some(DopplerSpec { area_fraction: 0.1, hue: DopplerHue::Red }),
            ..spec()
        };
        let (v, gt) = gen_video(&s, 4).unwrap();
        assert!(gt.doppler_flag);
        let verdict = doppler_verdict(&v, &PreprocessConfig::default());
        assert_eq!(verdict.red_fraction, gt.patch_fraction);
        assert_eq!(verdict.blue_fraction, 0.0);
        assert!(verdict.excluded);
    }

    #[test]
    fn invalid_specs() {
        let gray_patch = SynthVideoSpec {
            doppler: Some(DopplerSpec { area_fraction: 0.1, hue: DopplerHue::Blue }),
            ..spec()
        };
        assert!(gen_video(&gray_patch, 0).is_err());
        let whole = SynthVideoSpec {
            color: ColorKind::Rgb8,
            doppler: Some(DopplerSpec { area_fraction: 1.0, hue: DopplerHue::Blue }),
            ..spec()
        };
        assert!(gen_video(&whole, 0).is_err());
        assert!(gen_video(&SynthVideoSpec { frame_count: 1, ..spec() }, 0).is_err());
    }

    #[test]
    fn cohort_texture_follows_dx_and_discordance() {
        let spec = SynthCohortSpec { n_individuals: 300, ..SynthCohortSpec::default() };
        let c = gen_cohort(&spec, 5).unwrap();
        assert_eq!(c.videos.len(), 600);
        for (r, p) in c.individuals.iter().zip(&c.planted) {
            assert_eq!(p.texture_class == 1, r.hypertension_dx ^ p.discordant);
        }
        let disc = c.planted.iter().filter(|p| p.discordant).count();
        assert!((10..=55).contains(&disc), "{disc}");
        assert_eq!(c, gen_cohort(&spec, 5).unwrap());
    }

    #[test]
    fn zero_discordance_aligns_everyone() {
        let spec = SynthCohortSpec { n_individuals: 50, discordance: 0.0, ..SynthCohortSpec::default() };
        let c = gen_cohort(&spec, 2).unwrap();
        assert!(c.planted.iter().all(|p| p.group.aligned()));
    }

    #[test]
    fn single_individual() {
        let spec = SynthCohortSpec { n_individuals: 1, ..SynthCohortSpec::default() };
        let c = gen_cohort(&spec, 0).unwrap();
        assert_eq!(c.individuals.len(), 1);
        assert_eq!(c.individuals[0].individual_id, "ind0000");
    }

    #[test]
    fn sidecars_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = SynthVideoSpec {
            overlay: Some(OverlaySpec { glyphs: 2, depth_scale: false, band_height: 16, trace: false }),
            ..spec()
        };
        let (v, gt) = gen_video(&s, 8).unwrap();
        for fmt in [VideoFormat::Dicom, VideoFormat::FrameSequence] {
            let p = write_video(&v, &gt, dir.path(), fmt).unwrap();
            assert_eq!(crate::ingest::load_video(&p).unwrap(), v);
        }
        let m = read_mask(&dir.path().join("truth/synth.mask.png")).unwrap();
        assert_eq!(m, gt.ui_mask);
    }
}
