//! Flat `key = value` configuration files.
//!
//! `#` starts a comment. `include = other.conf` pulls in another file
//! (relative to the including file) whose keys the including file may
//! override. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::classify::{AggregationPolicy, TrainConfig};
use crate::preprocess::{ChangeStatistic, PreprocessConfig};
use crate::sampler::{AugConfig, NormStats, SamplingConfig};

const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{key} = {value:?}: {message}")]
    BadValue {
        key: String,
        value: String,
        message: String,
    },
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("include nesting deeper than {MAX_INCLUDE_DEPTH} at {0}")]
    IncludeDepth(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    /// Parse text; `include` lines are kept as ordinary keys.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (k, v) in parse_lines(text)? {
            entries.insert(k, v);
        }
        Ok(KeyValues { entries })
    }

    /// Load a file, resolving includes.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut kv = KeyValues::default();
        load_into(path, &mut kv.entries, 0)?;
        Ok(kv)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::BadValue {
                    key: key.into(),
                    value: v.into(),
                    message: e.to_string(),
                })
            })
            .transpose()
    }
}

fn parse_lines(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: n + 1,
            message: format!("expected key = value, got {line:?}"),
        })?;
        let key = k.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: n + 1,
                message: "empty key".into(),
            });
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn load_into(path: &Path, into: &mut BTreeMap<String, String>, depth: usize) -> Result<(), ConfigError> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(ConfigError::IncludeDepth(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    // Includes first so the including file wins.
    let lines = parse_lines(&text)?;
    for (_, v) in lines.iter().filter(|(k, _)| k == "include") {
        load_into(&base.join(v), into, depth + 1)?;
    }
    for (k, v) in lines.into_iter().filter(|(k, _)| k != "include") {
        into.insert(k, v);
    }
    Ok(())
}

/// ImageNet-style statistics used by common video backbones; the
/// default for newly trained built-in models.
pub const DEFAULT_NORM: NormStats = NormStats {
    mean: [0.485, 0.456, 0.406],
    std: [0.229, 0.224, 0.225],
};

/// Every tunable of the pipeline, with defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub preprocess: PreprocessConfig,
    pub sampling: SamplingConfig,
    pub augment: AugConfig,
    pub train: TrainConfig,
    pub norm: NormStats,
    pub aggregation: AggregationPolicy,
    pub val_fraction: f64,
    /// `None` selects Silverman's rule.
    pub kde_bandwidth: Option<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 0,
            preprocess: PreprocessConfig::default(),
            sampling: SamplingConfig::default(),
            augment: AugConfig::default(),
            train: TrainConfig::default(),
            norm: DEFAULT_NORM,
            aggregation: AggregationPolicy::Majority,
            val_fraction: 0.2,
            kde_bandwidth: None,
        }
    }
}

fn bad(key: &str, value: &str, message: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        message: message.into(),
    }
}

fn parse_triple(key: &str, value: &str) -> Result<[f32; 3], ConfigError> {
    let vals: Vec<f32> = value
        .split(',')
        .map(|s| s.trim().parse::<f32>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(key, value, &e.to_string()))?;
    <[f32; 3]>::try_from(vals).map_err(|_| bad(key, value, "expected three comma-separated numbers"))
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, &e.to_string()))
}

impl Settings {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let mut s = Settings::default();
        for key in kv.keys() {
            let v = kv.get(key).unwrap_or_default();
            match key {
                "seed" => s.seed = num(key, v)?,
                "change_statistic" => {
                    s.preprocess.change_statistic =
                        ChangeStatistic::parse(v).ok_or_else(|| bad(key, v, "expected variance or max_abs_diff"))?
                }
                "var_threshold" => s.preprocess.var_threshold = num(key, v)?,
                "crop_px" => s.preprocess.crop_px = num(key, v)?,
                "red_hue_below" => s.preprocess.red_hue_below = num(key, v)?,
                "red_hue_above" => s.preprocess.red_hue_above = num(key, v)?,
                "blue_hue_min" => s.preprocess.blue_hue_min = num(key, v)?,
                "blue_hue_max" => s.preprocess.blue_hue_max = num(key, v)?,
                "sat_min" => s.preprocess.sat_min = num(key, v)?,
                "val_min" => s.preprocess.val_min = num(key, v)?,
                "tau_red" => s.preprocess.tau_red = num(key, v)?,
                "tau_blue" => s.preprocess.tau_blue = num(key, v)?,
                "n_clips" => s.sampling.n_clips = num(key, v)?,
                "clip_len" => s.sampling.clip_len = num(key, v)?,
                "duration_s" => s.sampling.duration_s = num(key, v)?,
                "out_size" => s.sampling.out_size = num(key, v)?,
                "aug_scale_min" => s.augment.scale_min = num(key, v)?,
                "aug_scale_max" => s.augment.scale_max = num(key, v)?,
                "aug_flip_prob" => s.augment.flip_prob = num(key, v)?,
                "epochs" => s.train.epochs = num(key, v)?,
                "lr" => s.train.lr = num(key, v)?,
                "batch_size" => s.train.batch_size = num(key, v)?,
                "l2" => s.train.l2 = num(key, v)?,
                "class_weighting" => s.train.class_weighting = num(key, v)?,
                "norm_mean" => s.norm.mean = parse_triple(key, v)?,
                "norm_std" => s.norm.std = parse_triple(key, v)?,
                "aggregation" => {
                    s.aggregation =
                        AggregationPolicy::parse(v).ok_or_else(|| bad(key, v, "expected majority or mean_prob"))?
                }
                "val_fraction" => s.val_fraction = num(key, v)?,
                "kde_bandwidth" => {
                    s.kde_bandwidth = match v {
                        "auto" | "silverman" => None,
                        _ => Some(num(key, v)?),
                    }
                }
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        s.norm.validate().map_err(|m| bad("norm_std", "", &m))?;
        if !(0.0..=1.0).contains(&s.val_fraction) {
            return Err(bad("val_fraction", &s.val_fraction.to_string(), "must lie in [0, 1]"));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Settings::from_key_values(&KeyValues::load(path)?)
    }

    /// Every setting as `key = value` lines, sorted by key. Parsing the
    /// output yields the same settings.
    pub fn render(&self) -> String {
        let p = &self.preprocess;
        let t3 = |v: [f32; 3]| format!("{},{},{}", v[0], v[1], v[2]);
        let mut pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("change_statistic", p.change_statistic.as_str().into()),
            ("var_threshold", p.var_threshold.to_string()),
            ("crop_px", p.crop_px.to_string()),
            ("red_hue_below", p.red_hue_below.to_string()),
            ("red_hue_above", p.red_hue_above.to_string()),
            ("blue_hue_min", p.blue_hue_min.to_string()),
            ("blue_hue_max", p.blue_hue_max.to_string()),
            ("sat_min", p.sat_min.to_string()),
            ("val_min", p.val_min.to_string()),
            ("tau_red", p.tau_red.to_string()),
            ("tau_blue", p.tau_blue.to_string()),
            ("n_clips", self.sampling.n_clips.to_string()),
            ("clip_len", self.sampling.clip_len.to_string()),
            ("duration_s", self.sampling.duration_s.to_string()),
            ("out_size", self.sampling.out_size.to_string()),
            ("aug_scale_min", self.augment.scale_min.to_string()),
            ("aug_scale_max", self.augment.scale_max.to_string()),
            ("aug_flip_prob", self.augment.flip_prob.to_string()),
            ("epochs", self.train.epochs.to_string()),
            ("lr", self.train.lr.to_string()),
            ("batch_size", self.train.batch_size.to_string()),
            ("l2", self.train.l2.to_string()),
            ("class_weighting", self.train.class_weighting.to_string()),
            ("norm_mean", t3(self.norm.mean)),
            ("norm_std", t3(self.norm.std)),
            ("aggregation", self.aggregation.as_str().into()),
            ("val_fraction", self.val_fraction.to_string()),
            (
                "kde_bandwidth",
                self.kde_bandwidth.map_or_else(|| "auto".to_string(), |b| b.to_string()),
            ),
        ];
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        pairs
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// SHA-256 of the rendered settings.
    pub fn hash(&self) -> String {
        crate::seed::sha256_hex(self.render().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_render() {
        let s = Settings::default();
        let kv = KeyValues::parse(&s.render()).unwrap();
        assert_eq!(Settings::from_key_values(&kv).unwrap(), s);
    }

    #[test]
    fn includes_are_overridden_by_the_includer() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("base.conf"), "crop_px = 30\nvar_threshold = 4\n").unwrap();
        std::fs::write(
            dir.path().join("run.conf"),
            "# run\ninclude = base.conf\ncrop_px = 12 # override\n",
        )
        .unwrap();
        let s = Settings::load(&dir.path().join("run.conf")).unwrap();
        assert_eq!(s.preprocess.crop_px, 12);
        assert_eq!(s.preprocess.var_threshold, 4.0);
    }

    #[test]
    fn include_cycles_terminate() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.conf"), "include = a.conf\n").unwrap();
        assert!(matches!(
            KeyValues::load(&dir.path().join("a.conf")),
            Err(ConfigError::IncludeDepth(_))
        ));
    }

    #[test]
    fn bad_inputs() {
        let kv = KeyValues::parse("crop_pixels = 3").unwrap();
        assert!(matches!(Settings::from_key_values(&kv), Err(ConfigError::UnknownKey(_))));
        let kv = KeyValues::parse("crop_px = many").unwrap();
        assert!(matches!(Settings::from_key_values(&kv), Err(ConfigError::BadValue { .. })));
        assert!(matches!(KeyValues::parse("just words"), Err(ConfigError::Syntax { line: 1, .. })));
        let kv = KeyValues::parse("kde_bandwidth = auto\naggregation = mean_prob").unwrap();
        let s = Settings::from_key_values(&kv).unwrap();
        assert_eq!(s.kde_bandwidth, None);
        assert_eq!(s.aggregation, AggregationPolicy::MeanProb);
    }
}
