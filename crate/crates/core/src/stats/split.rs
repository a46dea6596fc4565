//! Individual-level train/validation split.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    /// Both sides sorted.
    pub train: Vec<String>,
    pub val: Vec<String>,
}

impl Split {
    pub fn is_val(&self, id: &str) -> bool {
        self.val.binary_search_by(|v| v.as_str().cmp(id)).is_ok()
    }
}

/// `|val| = round(fraction · N)`, chosen by a seeded shuffle. The result
/// does not depend on input order.
pub fn split_cohort(ids: &[String], val_fraction: f64, seed: u64) -> Result<Split, StatsError> {
    if ids.is_empty() {
        return Err(StatsError::EmptyCohort);
    }
    if !(0.0..=1.0).contains(&val_fraction) {
        return Err(StatsError::InvalidFraction(val_fraction));
    }
    let mut sorted: Vec<String> = ids.to_vec();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(StatsError::DuplicateId(w[0].clone()));
    }
    let n_val = (val_fraction * sorted.len() as f64).round() as usize;
    let mut rng = seed::derived_rng(seed, &[b"split"]);
    sorted.shuffle(&mut rng);
    let val: BTreeSet<String> = sorted.drain(..n_val).collect();
    sorted.sort();
    Ok(Split {
        train: sorted,
        val: val.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("id{i:05}")).collect()
    }

    #[test]
    fn rounding_and_determinism() {
        let s = split_cohort(&ids(14245), 0.2, 7).unwrap();
        assert_eq!(s.val.len(), 2849);
        assert_eq!(s.train.len(), 11396);
        assert_eq!(s, split_cohort(&ids(14245), 0.2, 7).unwrap());
        let mut rev = ids(14245);
        rev.reverse();
        assert_eq!(s, split_cohort(&rev, 0.2, 7).unwrap());
        assert_ne!(s, split_cohort(&ids(14245), 0.2, 8).unwrap());
    }

    #[test]
    fn edge_fractions() {
        assert!(split_cohort(&ids(10), 0.0, 1).unwrap().val.is_empty());
        assert!(split_cohort(&ids(10), 1.0, 1).unwrap().train.is_empty());
        assert_eq!(split_cohort(&[], 0.2, 1), Err(StatsError::EmptyCohort));
        assert_eq!(split_cohort(&ids(3), 1.5, 1), Err(StatsError::InvalidFraction(1.5)));
        let dup = vec!["a".to_string(), "b".into(), "a".into()];
        assert_eq!(split_cohort(&dup, 0.2, 1), Err(StatsError::DuplicateId("a".into())));
    }
}
