use vdamage_core::ingest::{detect_format, discover_inputs, load_video, probe_metadata, ColorKind, SourceFormat};
use vdamage_core::synth::{gen_video, write_video, DopplerHue, DopplerSpec, SynthVideoSpec, VideoFormat};

fn spec(id: &str, color: ColorKind) -> SynthVideoSpec {
    SynthVideoSpec {
        video_id: id.into(),
        individual_id: "ind0007".into(),
        width: 80,
        height: 72,
        frame_count: 20,
        fps: 24.0,
        color,
        doppler: (color == ColorKind::Rgb8).then_some(DopplerSpec {
            area_fraction: 0.05,
            hue: DopplerHue::Blue,
        }),
        ..SynthVideoSpec::default()
    }
}

#[test]
fn both_formats_round_trip_pixels_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    for (i, format) in [VideoFormat::Dicom, VideoFormat::FrameSequence].into_iter().enumerate() {
        for color in [ColorKind::Gray8, ColorKind::Rgb8] {
            let id = format!("rt{i}_{}", color.channels());
            let (v, gt) = gen_video(&spec(&id, color), 42).unwrap();
            let path = write_video(&v, &gt, dir.path(), format).unwrap();
            let expected = match format {
                VideoFormat::Dicom => SourceFormat::Dicom,
                VideoFormat::FrameSequence => SourceFormat::FrameSequence,
            };
            assert_eq!(detect_format(&path).unwrap(), expected);
            let meta = probe_metadata(&path).unwrap();
            assert_eq!(meta, v.meta);
            let back = load_video(&path).unwrap();
            assert_eq!(back.meta, v.meta);
            assert!(back.pixels() == v.pixels(), "{id}: pixels differ");
        }
    }
    let found = discover_inputs(&dir.path().join("videos")).unwrap();
    assert_eq!(found.len(), 4);
    let mut sorted = found.clone();
    sorted.sort();
    assert_eq!(found, sorted);
}

#[test]
fn truncated_dicom_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (v, gt) = gen_video(&spec("cut", ColorKind::Gray8), 1).unwrap();
    let path = write_video(&v, &gt, dir.path(), VideoFormat::Dicom).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 100]).unwrap();
    assert!(load_video(&path).is_err());
    std::fs::write(&path, b"not a video").unwrap();
    assert!(load_video(&path).is_err());
}
