use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// Quantile of already sorted data by linear interpolation between the
/// order statistics around position (n - 1) * q.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn quartiles(values: &[f64]) -> Result<Quartiles, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Quartiles {
        q25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q75: quantile_sorted(&sorted, 0.75),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn odd_length_and_constant() {
        assert_eq!(
            quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(),
            Quartiles { q25: 2.0, median: 3.0, q75: 4.0 }
        );
        assert_eq!(
            quartiles(&[7.5; 6]).unwrap(),
            Quartiles { q25: 7.5, median: 7.5, q75: 7.5 }
        );
        // n = 4: positions 0.75, 1.5, 2.25.
        assert_eq!(
            quartiles(&[4.0, 1.0, 3.0, 2.0]).unwrap(),
            Quartiles { q25: 1.75, median: 2.5, q75: 3.25 }
        );
        assert_eq!(quartiles(&[]), Err(StatsError::EmptyInput));
        assert_eq!(quartiles(&[1.0, f64::NAN]), Err(StatsError::NonFinite));
    }

    proptest! {
        #[test]
        fn ordered_and_permutation_invariant(mut v in proptest::collection::vec(-1e6f64..1e6, 1..60), seed in any::<u64>()) {
            let q = quartiles(&v).unwrap();
            prop_assert!(q.q25 <= q.median && q.median <= q.q75);
            use rand::seq::SliceRandom;
            v.shuffle(&mut crate::seed::rng(seed));
            prop_assert_eq!(quartiles(&v).unwrap(), q);
        }
    }
}
