//! Majority voting from clips to videos and videos to individuals.

use serde::{Deserialize, Serialize};

use super::{ClassifyError, ClipPrediction, IndividualPrediction, VdLabel, VideoPrediction, HIGH_VD_THRESHOLD};

/// Strict majority of labels; an exact tie goes to the mean probability.
fn majority(votes_high: usize, n: usize, mean_prob: f64) -> VdLabel {
    let doubled = 2 * votes_high;
    if doubled > n {
        VdLabel::HighVD
    } else if doubled < n {
        VdLabel::LowVD
    } else {
        VdLabel::from_prob(mean_prob)
    }
}

pub fn vote_video(preds: &[ClipPrediction]) -> Result<VideoPrediction, ClassifyError> {
    let first = preds.first().ok_or(ClassifyError::EmptyPredictionSet)?;
    if let Some(other) = preds.iter().find(|p| p.plan.video_id != first.plan.video_id) {
        return Err(ClassifyError::MixedVideoIds(
            first.plan.video_id.clone(),
            other.plan.video_id.clone(),
        ));
    }
    let n = preds.len();
    let votes_high = preds.iter().filter(|p| p.label.is_high()).count();
    // Summed in sorted order so the result is independent of input order.
    let mut probs: Vec<f64> = preds.iter().map(|p| p.prob_high_vd).collect();
    probs.sort_by(f64::total_cmp);
    let mean_prob = probs.iter().sum::<f64>() / n as f64;
    Ok(VideoPrediction {
        video_id: first.plan.video_id.clone(),
        individual_id: first.individual_id.clone(),
        n_clips: n,
        votes_high,
        mean_prob,
        label: majority(votes_high, n, mean_prob),
    })
}

/// Video-to-individual aggregation rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationPolicy {
    /// Majority of video labels, ties broken by the mean of video mean
    /// probabilities.
    #[default]
    Majority,
    /// Mean of video mean probabilities against the 0.5 threshold.
    MeanProb,
}

impl AggregationPolicy {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "majority" => Some(AggregationPolicy::Majority),
            "mean_prob" => Some(AggregationPolicy::MeanProb),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AggregationPolicy::Majority => "majority",
            AggregationPolicy::MeanProb => "mean_prob",
        }
    }
}

pub fn aggregate_individual(
    videos: &[VideoPrediction],
    policy: AggregationPolicy,
) -> Result<IndividualPrediction, ClassifyError> {
    let first = videos.first().ok_or(ClassifyError::EmptyPredictionSet)?;
    if let Some(other) = videos.iter().find(|v| v.individual_id != first.individual_id) {
        return Err(ClassifyError::MixedIndividualIds(
            first.individual_id.clone(),
            other.individual_id.clone(),
        ));
    }
    let n = videos.len();
    let votes_high = videos.iter().filter(|v| v.label.is_high()).count();
    let mut probs: Vec<f64> = videos.iter().map(|v| v.mean_prob).collect();
    probs.sort_by(f64::total_cmp);
    let mean_prob = probs.iter().sum::<f64>() / n as f64;
    let label = match policy {
        AggregationPolicy::Majority => majority(votes_high, n, mean_prob),
        AggregationPolicy::MeanProb => VdLabel::from_prob(mean_prob),
    };
    debug_assert!(HIGH_VD_THRESHOLD == 0.5);
    Ok(IndividualPrediction {
        individual_id: first.individual_id.clone(),
        n_videos: n,
        votes_high,
        mean_prob,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::ClipIndexPlan;

    pub(crate) fn clip(video: &str, prob: f64) -> ClipPrediction {
        ClipPrediction {
            plan: ClipIndexPlan {
                video_id: video.into(),
                clip_index: 0,
                start_frame: 0,
                frame_indices: vec![],
                seed: 0,
            },
            individual_id: "ind".into(),
            prob_high_vd: prob,
            label: VdLabel::from_prob(prob),
            model_id: "m".into(),
        }
    }

    fn video(label: VdLabel, mean_prob: f64) -> VideoPrediction {
        VideoPrediction {
            video_id: "v".into(),
            individual_id: "ind".into(),
            n_clips: 1,
            votes_high: usize::from(label.is_high()),
            mean_prob,
            label,
        }
    }

    #[test]
    fn strict_majority() {
        let v = vote_video(&[clip("a", 0.9), clip("a", 0.8), clip("a", 0.1)]).unwrap();
        assert_eq!(v.votes_high, 2);
        assert_eq!(v.label, VdLabel::HighVD);
    }

    #[test]
    fn tie_uses_mean_probability() {
        let v = vote_video(&[clip("a", 0.9), clip("a", 0.2)]).unwrap();
        assert!((v.mean_prob - 0.55).abs() < 1e-12);
        assert_eq!(v.label, VdLabel::HighVD);
    }

    #[test]
    fn single_vote() {
        assert_eq!(vote_video(&[clip("a", 0.3)]).unwrap().label, VdLabel::LowVD);
    }

    #[test]
    fn vote_errors() {
        assert!(matches!(vote_video(&[]), Err(ClassifyError::EmptyPredictionSet)));
        assert!(matches!(
            vote_video(&[clip("a", 0.3), clip("b", 0.3)]),
            Err(ClassifyError::MixedVideoIds(..))
        ));
    }

    #[test]
    fn individual_majority_identity_and_tie() {
        use VdLabel::*;
        let p = AggregationPolicy::Majority;
        let three = [video(HighVD, 0.8), video(HighVD, 0.7), video(LowVD, 0.2)];
        assert_eq!(aggregate_individual(&three, p).unwrap().label, HighVD);
        assert_eq!(aggregate_individual(&three[2..], p).unwrap().label, LowVD);
        let tie = [video(HighVD, 0.6), video(LowVD, 0.3)];
        let agg = aggregate_individual(&tie, p).unwrap();
        assert!((agg.mean_prob - 0.45).abs() < 1e-12);
        assert_eq!(agg.label, LowVD);
        assert!(matches!(aggregate_individual(&[], p), Err(ClassifyError::EmptyPredictionSet)));
        let mut other = video(LowVD, 0.1);
        other.individual_id = "x".into();
        assert!(matches!(
            aggregate_individual(&[video(LowVD, 0.2), other], p),
            Err(ClassifyError::MixedIndividualIds(..))
        ));
    }
}
