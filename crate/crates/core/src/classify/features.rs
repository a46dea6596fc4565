//! Pooled clip features for the built-in linear baseline.

use crate::sampler::{ClipTensor, CLIP_CHANNELS};

pub const FEATURE_COUNT: usize = 12;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "mean_r", "mean_g", "mean_b", "std_r", "std_g", "std_b", "grad_r", "grad_g", "grad_b", "tdiff_r",
    "tdiff_g", "tdiff_b",
];

/// Per channel: mean, standard deviation, mean absolute spatial gradient
/// (horizontal and vertical neighbours pooled) and mean absolute
/// frame-to-frame difference. Accumulated in f64, in a fixed order.
pub fn clip_features(clip: &ClipTensor) -> [f64; FEATURE_COUNT] {
    let size = clip.size;
    let frame_len = size * size * CLIP_CHANNELS;
    let mut sum = [0f64; 3];
    let mut sum_sq = [0f64; 3];
    let mut grad = [0f64; 3];
    let mut tdiff = [0f64; 3];
    for t in 0..clip.frames {
        let frame = &clip.data[t * frame_len..(t + 1) * frame_len];
        for y in 0..size {
            for x in 0..size {
                let i = (y * size + x) * CLIP_CHANNELS;
                for c in 0..CLIP_CHANNELS {
                    let v = f64::from(frame[i + c]);
                    sum[c] += v;
                    sum_sq[c] += v * v;
                    if x + 1 < size {
                        grad[c] += (f64::from(frame[i + CLIP_CHANNELS + c]) - v).abs();
                    }
                    if y + 1 < size {
                        grad[c] += (f64::from(frame[i + size * CLIP_CHANNELS + c]) - v).abs();
                    }
                }
            }
        }
        if t + 1 < clip.frames {
            let next = &clip.data[(t + 1) * frame_len..(t + 2) * frame_len];
            for (i, (a, b)) in frame.iter().zip(next).enumerate() {
                tdiff[i % CLIP_CHANNELS] += (f64::from(*b) - f64::from(*a)).abs();
            }
        }
    }
    let n = (clip.frames * size * size) as f64;
    let grad_n = (clip.frames * 2 * size * size.saturating_sub(1)).max(1) as f64;
    let tdiff_n = (clip.frames.saturating_sub(1) * size * size).max(1) as f64;
    let mut out = [0f64; FEATURE_COUNT];
    for c in 0..CLIP_CHANNELS {
        let mean = sum[c] / n;
        out[c] = mean;
        out[3 + c] = (sum_sq[c] / n - mean * mean).max(0.0).sqrt();
        out[6 + c] = grad[c] / grad_n;
        out[9 + c] = tdiff[c] / tdiff_n;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::ClipIndexPlan;

    fn clip(frames: usize, size: usize, f: impl Fn(usize, usize, usize, usize) -> f32) -> ClipTensor {
        let mut data = Vec::new();
        for t in 0..frames {
            for y in 0..size {
                for x in 0..size {
                    for c in 0..3 {
                        data.push(f(t, y, x, c));
                    }
                }
            }
        }
        ClipTensor {
            data,
            frames,
            size,
            normalized: true,
            plan: ClipIndexPlan {
                video_id: "v".into(),
                clip_index: 0,
                start_frame: 0,
                frame_indices: (0..frames).collect(),
                seed: 0,
            },
        }
    }

    #[test]
    fn constant_clip_features() {
        let f = clip_features(&clip(3, 4, |_, _, _, c| c as f32));
        assert_eq!(&f[..3], &[0.0, 1.0, 2.0]);
        assert!(f[3..].iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn gradient_and_temporal_terms() {
        // Horizontal ramp: |dx| = 1 on 3 of 4 columns, vertical diffs 0.
        let f = clip_features(&clip(2, 4, |_, _, x, _| x as f32));
        let expected_grad = (2.0 * 4.0 * 3.0) / (2.0 * 2.0 * 4.0 * 3.0);
        assert!((f[6] - expected_grad).abs() < 1e-12);
        assert_eq!(f[9], 0.0);
        let g = clip_features(&clip(3, 4, |t, _, _, _| (2 * t) as f32));
        assert!((g[9] - 2.0).abs() < 1e-12);
    }
}
