//! Parity of the tract-backed graph path against probabilities recorded
//! by the exporter (fixtures/toy_graph, regenerated by make_toy_graph.py).
#![cfg(feature = "onnx")]

use std::path::PathBuf;

use vdamage_core::classify::parity::{check_parity, PARITY_NAME};
use vdamage_core::classify::{load_model, predict_clip};
use vdamage_core::sampler::export::{write_clip, write_index, ClipIndexRecord};
use vdamage_core::sampler::{normalize, ClipIndexPlan, ClipTensor, CLIP_CHANNELS, CLIP_LEN, CLIP_SIZE};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy_graph")
}

/// Same formula as the fixture script.
fn toy_clip(k: usize) -> ClipTensor {
    let (t_n, s, c_n) = (CLIP_LEN, CLIP_SIZE, CLIP_CHANNELS);
    let mut data = Vec::with_capacity(t_n * s * s * c_n);
    for t in 0..t_n {
        for y in 0..s {
            for x in 0..s {
                for c in 0..c_n {
                    let v = ((t * 11 + y * 3 + x * 5 + c * (7 + 13 * k)) % 256) * ((k + c) % 4 + 1) / 4;
                    data.push(v as f32);
                }
            }
        }
    }
    ClipTensor {
        data,
        frames: t_n,
        size: s,
        normalized: false,
        plan: ClipIndexPlan {
            video_id: "toy".into(),
            clip_index: k,
            start_frame: 0,
            frame_indices: (0..t_n).collect(),
            seed: k as u64,
        },
    }
}

#[test]
fn toy_graph_matches_recorded_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = Vec::new();
    for k in 0..20 {
        let clip = toy_clip(k);
        let file = format!("toy_c{k}.f32");
        write_clip(&dir.path().join(&file), &clip).unwrap();
        records.push(ClipIndexRecord::new(file, "ind", k % 2 == 0, &clip));
    }
    write_index(dir.path(), &records).unwrap();
    std::fs::copy(fixture().join(PARITY_NAME), dir.path().join(PARITY_NAME)).unwrap();

    let model = load_model(&fixture().join("toy.card")).unwrap();
    assert_eq!(model.model_id, "toy-mean-pool");
    let report = check_parity(&model, dir.path()).unwrap();
    println!("parity: n={} agreement={} max|d|={:e}", report.n, report.agreement, report.max_abs_delta);
    assert_eq!(report.n, 20);
    assert!(report.passes(0.99, 1e-4), "{report:?}");
}

#[test]
fn graph_prediction_uses_class_one() {
    let model = load_model(&fixture().join("toy.card")).unwrap();
    let clip = normalize(&toy_clip(3), &model.norm_stats).unwrap();
    let p = predict_clip(&model, &clip, "ind").unwrap();
    // Recorded as 0.876... for clip 3.
    assert!((p.prob_high_vd - 0.8763198518852443).abs() < 1e-4);
    assert!(p.label.is_high());
}

#[test]
fn unnormalized_clip_is_rejected() {
    let model = load_model(&fixture().join("toy.card")).unwrap();
    assert!(predict_clip(&model, &toy_clip(0), "ind").is_err());
}

#[test]
fn card_with_reversed_class_order_fails_to_load() {
    let dir = tempfile::tempdir().unwrap();
    let card = std::fs::read_to_string(fixture().join("toy.card"))
        .unwrap()
        .replace("class_order = low_vd,high_vd", "class_order = high_vd,low_vd")
        .replace("artifact = toy.onnx", &format!("artifact = {}", fixture().join("toy.onnx").display()));
    std::fs::write(dir.path().join("bad.card"), card).unwrap();
    assert!(load_model(&dir.path().join("bad.card")).is_err());
}
