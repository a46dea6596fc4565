//! Evaluation metrics and the stratified cohort analysis.

pub mod cohort;
pub mod events;
pub mod kde;
pub mod metrics;
pub mod quantile;
pub mod split;
pub mod strat;

use thiserror::Error;

pub use cohort::{Continuous, Event, Flag, IndividualRecord, Sex};
pub use events::{event_table, EventTable};
pub use kde::{alignment_by_age, AlignmentCurves, Bandwidth};
pub use metrics::{accuracy, balanced_accuracy, confusion, ConfusionMatrix};
pub use quantile::{quartiles, Quartiles};
pub use split::{split_cohort, Split};
pub use strat::{prevalence_ratio, stratify, Group, Ratio, StratReport};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("length mismatch: {0} predictions, {1} labels")]
    LengthMismatch(usize, usize),
    #[error("class recall undefined: no {0} samples")]
    UndefinedClassRecall(&'static str),
    #[error("empty cohort")]
    EmptyCohort,
    #[error("duplicate individual id {0}")]
    DuplicateId(String),
    #[error("invalid fraction {0}")]
    InvalidFraction(f64),
    #[error("no visual-damage label for individual {0}")]
    MissingVdLabel(String),
    #[error("invalid bandwidth {0}")]
    InvalidBandwidth(f64),
    #[error("malformed cohort table: {0}")]
    MalformedCohortTable(String),
}
