use serde::{Deserialize, Serialize};

use super::StatsError;

/// Binary confusion counts; positive = hypertensive / HighVD.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn sensitivity(&self) -> Option<f64> {
        let pos = self.tp + self.fn_;
        (pos > 0).then(|| self.tp as f64 / pos as f64)
    }

    pub fn specificity(&self) -> Option<f64> {
        let neg = self.tn + self.fp;
        (neg > 0).then(|| self.tn as f64 / neg as f64)
    }
}

pub fn confusion(preds: &[bool], truth: &[bool]) -> Result<ConfusionMatrix, StatsError> {
    if preds.len() != truth.len() {
        return Err(StatsError::LengthMismatch(preds.len(), truth.len()));
    }
    if preds.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let mut m = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(truth) {
        m.add(p, t);
    }
    Ok(m)
}

pub fn accuracy(m: &ConfusionMatrix) -> Result<f64, StatsError> {
    match m.total() {
        0 => Err(StatsError::EmptyInput),
        total => Ok((m.tp + m.tn) as f64 / total as f64),
    }
}

/// Mean of sensitivity and specificity.
pub fn balanced_accuracy(m: &ConfusionMatrix) -> Result<f64, StatsError> {
    let sens = m.sensitivity().ok_or(StatsError::UndefinedClassRecall("positive"))?;
    let spec = m.specificity().ok_or(StatsError::UndefinedClassRecall("negative"))?;
    Ok((sens + spec) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_inverted() {
        let truth: Vec<bool> = (0..20).map(|i| i < 10).collect();
        let m = confusion(&truth, &truth).unwrap();
        assert_eq!(m, ConfusionMatrix { tp: 10, fp: 0, tn: 10, fn_: 0 });
        assert_eq!(accuracy(&m).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&m).unwrap(), 1.0);
        let inv: Vec<bool> = truth.iter().map(|t| !t).collect();
        let m = confusion(&inv, &truth).unwrap();
        assert_eq!((m.tp, m.tn), (0, 0));
    }

    #[test]
    fn reference_arithmetic() {
        let m = ConfusionMatrix { tp: 90, fn_: 10, tn: 60, fp: 40 };
        assert_eq!(balanced_accuracy(&m).unwrap(), 0.75);
        assert_eq!(accuracy(&m).unwrap(), 0.75);
        // All-positive predictor on a 90/10 split.
        let m = ConfusionMatrix { tp: 90, fn_: 0, tn: 0, fp: 10 };
        assert_eq!(accuracy(&m).unwrap(), 0.9);
        assert_eq!(balanced_accuracy(&m).unwrap(), 0.5);
    }

    #[test]
    fn errors() {
        assert_eq!(confusion(&[true], &[]), Err(StatsError::LengthMismatch(1, 0)));
        assert_eq!(confusion(&[], &[]), Err(StatsError::EmptyInput));
        let m = ConfusionMatrix { tp: 3, fp: 1, tn: 0, fn_: 0 };
        assert!(balanced_accuracy(&m).is_ok());
        let m = ConfusionMatrix { tp: 0, fp: 1, tn: 4, fn_: 0 };
        assert_eq!(balanced_accuracy(&m), Err(StatsError::UndefinedClassRecall("positive")));
        assert_eq!(accuracy(&ConfusionMatrix::default()), Err(StatsError::EmptyInput));
    }
}
