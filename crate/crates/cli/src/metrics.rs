use serde::{Deserialize, Serialize};
use vdamage_core::stats::{accuracy, balanced_accuracy, ConfusionMatrix};

/// Confusion plus headline metrics at one aggregation level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub n: u64,
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    /// `None` when one class is absent from the truth.
    pub balanced_accuracy: Option<f64>,
}

impl LevelMetrics {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut m = ConfusionMatrix::default();
        for (pred, truth) in pairs {
            m.add(pred, truth);
        }
        LevelMetrics {
            n: m.total(),
            accuracy: accuracy(&m).ok(),
            balanced_accuracy: balanced_accuracy(&m).ok(),
            confusion: m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub clip: LevelMetrics,
    pub video: LevelMetrics,
    pub individual: LevelMetrics,
}
