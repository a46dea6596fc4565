//! Model cards, model handles, the built-in logistic baseline and
//! clip scoring.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{clip_features, FEATURE_COUNT};
use super::{ClassifyError, ClipPrediction, VdLabel};
use crate::config::KeyValues;
use crate::sampler::{ClipTensor, NormStats, CLIP_CHANNELS, CLIP_LEN, CLIP_SIZE};
use crate::seed;

/// The only accepted class order: index 1 is HighVD.
pub const CLASS_ORDER: &str = "low_vd,high_vd";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    BuiltinLinear,
    ExternalGraph,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::BuiltinLinear => "builtin_linear",
            ModelKind::ExternalGraph => "external_graph",
        }
    }
}

/// Input tensor layout of an external graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputLayout {
    /// 1 x 3 x 16 x 224 x 224
    Ncthw,
    /// 1 x 16 x 224 x 224 x 3
    Nthwc,
}

impl InputLayout {
    pub fn dims(self) -> [usize; 5] {
        match self {
            InputLayout::Ncthw => [1, CLIP_CHANNELS, CLIP_LEN, CLIP_SIZE, CLIP_SIZE],
            InputLayout::Nthwc => [1, CLIP_LEN, CLIP_SIZE, CLIP_SIZE, CLIP_CHANNELS],
        }
    }
}

/// What the graph's first output holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphOutput {
    Logits,
    Probabilities,
}

/// `key = value` file shipped next to every model artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCard {
    pub model_id: String,
    pub kind: ModelKind,
    pub norm_stats: NormStats,
    pub input_layout: InputLayout,
    pub output: GraphOutput,
    /// Relative paths resolve against the card's directory.
    pub artifact: PathBuf,
}

fn load_err(msg: impl Into<String>) -> ClassifyError {
    ClassifyError::ModelLoad(msg.into())
}

fn triple(kv: &KeyValues, key: &str) -> Result<[f32; 3], ClassifyError> {
    let raw = kv
        .get(key)
        .ok_or_else(|| load_err(format!("model card lacks {key}")))?;
    let vals: Vec<f32> = raw
        .split(',')
        .map(|s| s.trim().parse::<f32>())
        .collect::<Result<_, _>>()
        .map_err(|_| load_err(format!("{key} = {raw:?} is not three numbers")))?;
    <[f32; 3]>::try_from(vals).map_err(|_| load_err(format!("{key} needs exactly three values")))
}

impl ModelCard {
    pub fn parse(text: &str, base_dir: &Path) -> Result<ModelCard, ClassifyError> {
        let kv = KeyValues::parse(text).map_err(|e| load_err(e.to_string()))?;
        let required = |k: &str| {
            kv.get(k)
                .map(str::to_string)
                .ok_or_else(|| load_err(format!("model card lacks {k}")))
        };
        let kind = match required("kind")?.as_str() {
            "builtin_linear" => ModelKind::BuiltinLinear,
            "external_graph" => ModelKind::ExternalGraph,
            other => return Err(load_err(format!("unknown model kind {other:?}"))),
        };
        let class_order: String = required("class_order")?.split_whitespace().collect();
        if class_order != CLASS_ORDER {
            return Err(load_err(format!(
                "class_order {class_order:?}, pipeline requires {CLASS_ORDER:?}"
            )));
        }
        let input_layout = match kv.get("input_layout").unwrap_or("ncthw").to_ascii_lowercase().as_str() {
            "ncthw" | "1x3x16x224x224" => InputLayout::Ncthw,
            "nthwc" | "1x16x224x224x3" => InputLayout::Nthwc,
            other => return Err(load_err(format!("unsupported input_layout {other:?}"))),
        };
        let output = match kv.get("output").unwrap_or("logits") {
            "logits" => GraphOutput::Logits,
            "probabilities" => GraphOutput::Probabilities,
            other => return Err(load_err(format!("unsupported output {other:?}"))),
        };
        let norm_stats = NormStats {
            mean: triple(&kv, "mean")?,
            std: triple(&kv, "std")?,
        };
        norm_stats.validate().map_err(load_err)?;
        let artifact = PathBuf::from(required("artifact")?);
        Ok(ModelCard {
            model_id: required("model_id")?,
            kind,
            norm_stats,
            input_layout,
            output,
            artifact: if artifact.is_absolute() {
                artifact
            } else {
                base_dir.join(artifact)
            },
        })
    }

    pub fn read(path: &Path) -> Result<ModelCard, ClassifyError> {
        let text = std::fs::read_to_string(path).map_err(|e| load_err(format!("{}: {e}", path.display())))?;
        ModelCard::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Render the card; `artifact` is written as its file name.
    pub fn render(&self) -> String {
        let fmt3 = |v: [f32; 3]| format!("{},{},{}", v[0], v[1], v[2]);
        format!(
            "model_id = {}\nkind = {}\nmean = {}\nstd = {}\ninput_layout = {}\noutput = {}\nclass_order = {}\nartifact = {}\n",
            self.model_id,
            self.kind.as_str(),
            fmt3(self.norm_stats.mean),
            fmt3(self.norm_stats.std),
            match self.input_layout {
                InputLayout::Ncthw => "ncthw",
                InputLayout::Nthwc => "nthwc",
            },
            match self.output {
                GraphOutput::Logits => "logits",
                GraphOutput::Probabilities => "probabilities",
            },
            CLASS_ORDER,
            self.artifact
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        )
    }
}

/// Logistic regression over standardized clip features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: [f64; FEATURE_COUNT],
    pub bias: f64,
    pub feature_mean: [f64; FEATURE_COUNT],
    pub feature_scale: [f64; FEATURE_COUNT],
}

impl LinearModel {
    pub fn zeros() -> Self {
        LinearModel {
            weights: [0.0; FEATURE_COUNT],
            bias: 0.0,
            feature_mean: [0.0; FEATURE_COUNT],
            feature_scale: [1.0; FEATURE_COUNT],
        }
    }

    pub fn score(&self, features: &[f64; FEATURE_COUNT]) -> f64 {
        let mut z = self.bias;
        for i in 0..FEATURE_COUNT {
            z += self.weights[i] * (features[i] - self.feature_mean[i]) / self.feature_scale[i];
        }
        z
    }

    pub fn prob(&self, features: &[f64; FEATURE_COUNT]) -> f64 {
        sigmoid(self.score(features))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

enum Backend {
    Linear(LinearModel),
    #[cfg(feature = "onnx")]
    Graph(super::graph::GraphModel),
}

/// Loaded, immutable model. Safe to share across threads.
pub struct ModelHandle {
    pub model_id: String,
    pub kind: ModelKind,
    pub norm_stats: NormStats,
    pub artifact_path: PathBuf,
    backend: Backend,
}

impl std::fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelHandle")
            .field("model_id", &self.model_id)
            .field("kind", &self.kind)
            .field("norm_stats", &self.norm_stats)
            .field("artifact_path", &self.artifact_path)
            .finish_non_exhaustive()
    }
}

impl ModelHandle {
    pub fn builtin(model_id: &str, norm_stats: NormStats, model: LinearModel) -> Self {
        ModelHandle {
            model_id: model_id.to_string(),
            kind: ModelKind::BuiltinLinear,
            norm_stats,
            artifact_path: PathBuf::new(),
            backend: Backend::Linear(model),
        }
    }

    pub fn linear(&self) -> Option<&LinearModel> {
        match &self.backend {
            Backend::Linear(m) => Some(m),
            #[cfg(feature = "onnx")]
            Backend::Graph(_) => None,
        }
    }

    /// Write `card_path` plus the artifact beside it. Built-in models only.
    pub fn save_builtin(&self, card_path: &Path) -> Result<(), ClassifyError> {
        let model = self
            .linear()
            .ok_or_else(|| load_err("only built-in models can be saved"))?;
        let artifact = card_path.with_extension("weights.json");
        let card = ModelCard {
            model_id: self.model_id.clone(),
            kind: ModelKind::BuiltinLinear,
            norm_stats: self.norm_stats,
            input_layout: InputLayout::Nthwc,
            output: GraphOutput::Probabilities,
            artifact: artifact.clone(),
        };
        let io = |path: &Path, e: std::io::Error| ClassifyError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let json = serde_json::to_string_pretty(model).map_err(|e| load_err(e.to_string()))?;
        std::fs::write(&artifact, json + "\n").map_err(|e| io(&artifact, e))?;
        std::fs::write(card_path, card.render()).map_err(|e| io(card_path, e))?;
        Ok(())
    }
}

pub fn load_model(card_path: &Path) -> Result<ModelHandle, ClassifyError> {
    let card = ModelCard::read(card_path)?;
    let backend = match card.kind {
        ModelKind::BuiltinLinear => {
            let text = std::fs::read_to_string(&card.artifact)
                .map_err(|e| load_err(format!("{}: {e}", card.artifact.display())))?;
            let model: LinearModel =
                serde_json::from_str(&text).map_err(|e| load_err(format!("{}: {e}", card.artifact.display())))?;
            if model.feature_scale.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
                return Err(load_err("feature scales must be positive"));
            }
            Backend::Linear(model)
        }
        #[cfg(feature = "onnx")]
        ModelKind::ExternalGraph => Backend::Graph(super::graph::GraphModel::load(&card)?),
        #[cfg(not(feature = "onnx"))]
        ModelKind::ExternalGraph => return Err(load_err("built without ONNX support")),
    };
    Ok(ModelHandle {
        model_id: card.model_id,
        kind: card.kind,
        norm_stats: card.norm_stats,
        artifact_path: card.artifact,
        backend,
    })
}

/// Probability of HighVD for one clip.
pub fn clip_probability(m: &ModelHandle, c: &ClipTensor) -> Result<f64, ClassifyError> {
    if !c.normalized {
        return Err(ClassifyError::NotNormalized);
    }
    match &m.backend {
        Backend::Linear(model) => {
            if c.frames == 0 || c.size == 0 {
                return Err(ClassifyError::ShapeMismatch {
                    expected: vec![CLIP_LEN, CLIP_SIZE, CLIP_SIZE, CLIP_CHANNELS],
                    found: c.shape().to_vec(),
                });
            }
            Ok(model.prob(&clip_features(c)))
        }
        #[cfg(feature = "onnx")]
        Backend::Graph(g) => g.prob(c),
    }
}

pub fn predict_clip(m: &ModelHandle, c: &ClipTensor, individual_id: &str) -> Result<ClipPrediction, ClassifyError> {
    let prob = clip_probability(m, c)?.clamp(0.0, 1.0);
    Ok(ClipPrediction {
        plan: c.plan.clone(),
        individual_id: individual_id.to_string(),
        prob_high_vd: prob,
        label: VdLabel::from_prob(prob),
        model_id: m.model_id.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub l2: f64,
    /// Weight samples by `N / (2 N_k)` so both classes count equally.
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            lr: 0.5,
            batch_size: 32,
            l2: 1e-4,
            class_weighting: true,
        }
    }
}

/// Fit the built-in logistic baseline by seeded mini-batch gradient
/// descent on standardized features.
pub fn train_builtin(
    samples: &[([f64; FEATURE_COUNT], bool)],
    cfg: &TrainConfig,
    seed_value: u64,
) -> Result<LinearModel, ClassifyError> {
    let labels: Vec<bool> = samples.iter().map(|(_, l)| *l).collect();
    let weights = crate::sampler::class_weights(&labels).map_err(|_| ClassifyError::SingleClassDataset)?;
    let weights: Vec<f64> = if cfg.class_weighting {
        weights
    } else {
        vec![1.0; samples.len()]
    };

    let n = samples.len() as f64;
    let mut mean = [0f64; FEATURE_COUNT];
    for (f, _) in samples {
        for i in 0..FEATURE_COUNT {
            mean[i] += f[i] / n;
        }
    }
    let mut scale = [0f64; FEATURE_COUNT];
    for (f, _) in samples {
        for i in 0..FEATURE_COUNT {
            scale[i] += (f[i] - mean[i]).powi(2) / n;
        }
    }
    for s in &mut scale {
        *s = s.sqrt();
        if !(*s > 1e-12) {
            *s = 1.0;
        }
    }
    let standardized: Vec<[f64; FEATURE_COUNT]> = samples
        .iter()
        .map(|(f, _)| std::array::from_fn(|i| (f[i] - mean[i]) / scale[i]))
        .collect();

    let mut w = [0f64; FEATURE_COUNT];
    let mut b = 0f64;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = seed::derived_rng(seed_value, &[b"train_builtin"]);
    let batch = cfg.batch_size.max(1);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut gw = [0f64; FEATURE_COUNT];
            let mut gb = 0f64;
            let mut total_weight = 0f64;
            for &k in chunk {
                let x = &standardized[k];
                let z = b + (0..FEATURE_COUNT).map(|i| w[i] * x[i]).sum::<f64>();
                let err = (sigmoid(z) - f64::from(u8::from(labels[k]))) * weights[k];
                for i in 0..FEATURE_COUNT {
                    gw[i] += err * x[i];
                }
                gb += err;
                total_weight += weights[k];
            }
            for i in 0..FEATURE_COUNT {
                w[i] -= cfg.lr * (gw[i] / total_weight + cfg.l2 * w[i]);
            }
            b -= cfg.lr * gb / total_weight;
        }
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
        feature_mean: mean,
        feature_scale: scale,
    })
}
