use std::path::Path;

use vdamage_cli::manifest::RunManifest;
use vdamage_core::ingest::ColorKind;
use vdamage_core::synth::{gen_video, write_video, DopplerHue, DopplerSpec, SynthVideoSpec, VideoFormat};

fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["vdamage"];
    full.extend_from_slice(args);
    vdamage_cli::run(full)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_video(root: &Path, i: usize, doppler: bool) {
    let spec = SynthVideoSpec {
        video_id: format!("v{i:03}"),
        individual_id: format!("ind{:04}", i / 2),
        width: 64,
        height: 96,
        frame_count: 20,
        color: ColorKind::Rgb8,
        doppler: doppler.then_some(DopplerSpec {
            area_fraction: 0.06,
            hue: if i % 2 == 0 { DopplerHue::Red } else { DopplerHue::Blue },
        }),
        ..SynthVideoSpec::default()
    };
    let (v, gt) = gen_video(&spec, i as u64).unwrap();
    write_video(&v, &gt, root, VideoFormat::Dicom).unwrap();
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["--help"]), 0);
    assert_eq!(cli(&["no-such-command"]), 1);
    assert_eq!(cli(&["preprocess"]), 1);
    // Missing --out is a usage problem.
    assert_eq!(cli(&["preprocess", s(dir.path())]), 1);
    // Unreadable input directory is a data problem.
    let out = dir.path().join("out");
    assert_eq!(cli(&["preprocess", s(&dir.path().join("missing")), "--out", s(&out)]), 2);
    // A model card that does not exist is a model problem.
    std::fs::create_dir_all(dir.path().join("empty")).unwrap();
    let code = cli(&[
        "infer",
        s(&dir.path().join("empty")),
        "--model-card",
        s(&dir.path().join("nope.card")),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn empty_input_gives_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    std::fs::create_dir_all(&input).unwrap();
    let out = dir.path().join("out");
    assert_eq!(cli(&["preprocess", s(&input), "--out", s(&out)]), 0);
    let m = RunManifest::read(&out).unwrap();
    assert!(m.inputs.is_empty());
    assert_eq!(m.timing.items, 0);
}

#[test]
fn doppler_videos_are_excluded_and_rerun_skips_everything() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    for i in 0..100 {
        small_video(&corpus, i, i % 10 == 3);
    }
    let out = dir.path().join("pre");
    let videos = corpus.join("videos");
    let args = ["preprocess", s(&videos), "--out", s(&out), "--workers", "4"];
    assert_eq!(cli(&args), 0);
    let first = RunManifest::read(&out).unwrap();
    assert_eq!(first.inputs.len(), 100);
    assert_eq!(first.count("processed"), 90);
    assert_eq!(first.count("excluded"), 10);
    let exclusions = std::fs::read_to_string(out.join("exclusions.tsv")).unwrap();
    assert_eq!(exclusions.lines().count(), 11);
    assert!(exclusions.lines().skip(1).all(|l| l.starts_with("v") && l.contains("3")));

    assert_eq!(cli(&args), 0);
    let second = RunManifest::read(&out).unwrap();
    assert_eq!(second.count("skipped"), 100);
    assert_eq!(std::fs::read_to_string(out.join("exclusions.tsv")).unwrap(), exclusions);
    assert_eq!(second.run_id, first.run_id);
}

#[test]
fn report_with_unknown_individuals_exits_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let corpus = root.join("corpus");
    let run = |args: &[&str]| cli(args);
    assert_eq!(
        run(&["synth", "--out", s(&corpus), "--individuals", "12", "--size", "112", "--frames", "20", "--seed", "3"]),
        0
    );
    let pre = root.join("pre");
    assert_eq!(run(&["preprocess", s(&corpus.join("videos")), "--out", s(&pre)]), 0);
    let model = root.join("model");
    let card = model.join("m.card");
    let cohort = corpus.join("cohort.csv");
    assert_eq!(
        run(&["train", s(&pre), "--cohort", s(&cohort), "--model-card", s(&card), "--out", s(&model), "--seed", "3"]),
        0
    );
    let pred = root.join("pred");
    assert_eq!(run(&["infer", s(&pre), "--model-card", s(&card), "--out", s(&pred)]), 0);
    let report = root.join("report");
    let dump = pred.join("clips.jsonl");
    assert_eq!(run(&["report", s(&dump), "--cohort", s(&cohort), "--out", s(&report)]), 0);
    assert!(report.join("report.json").is_file());

    // Drop the first individual from the cohort table.
    let text = std::fs::read_to_string(&cohort).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.remove(1);
    let trimmed = root.join("trimmed.csv");
    std::fs::write(&trimmed, lines.join("\n") + "\n").unwrap();
    let report2 = root.join("report2");
    assert_eq!(run(&["report", s(&dump), "--cohort", s(&trimmed), "--out", s(&report2)]), 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report2.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["missing_from_cohort"].as_array().unwrap().len(), 1);
}
