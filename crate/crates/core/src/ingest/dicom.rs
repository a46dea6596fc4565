//! Minimal DICOM Part 10 support: uncompressed, explicit VR little
//! endian, multi-frame, 8 bits per sample, MONOCHROME2 or RGB.
//!
//! Probing stops at the Pixel Data element, so no pixel bytes are read.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom};
use std::path::Path;

use super::{ColorKind, FrameVolume, IngestError, Site, VideoMeta, DEFAULT_FPS};

pub const PREAMBLE_LEN: usize = 128;
pub const MAGIC: &[u8; 4] = b"DICM";

pub const EXPLICIT_VR_LITTLE_ENDIAN: &str = "1.2.840.10008.1.2.1";
pub const IMPLICIT_VR_LITTLE_ENDIAN: &str = "1.2.840.10008.1.2";
pub const JPEG_BASELINE: &str = "1.2.840.10008.1.2.4.50";
const US_MULTIFRAME_STORAGE: &str = "1.2.840.10008.5.1.4.1.1.3.1";
const IMPLEMENTATION_UID: &str = "2.25.301907464146939284631557434716";

type Tag = (u16, u16);

const TRANSFER_SYNTAX: Tag = (0x0002, 0x0010);
const SOP_CLASS: Tag = (0x0008, 0x0016);
const SOP_INSTANCE: Tag = (0x0008, 0x0018);
const MODALITY: Tag = (0x0008, 0x0060);
const SERIES_DESCRIPTION: Tag = (0x0008, 0x103E);
const PATIENT_ID: Tag = (0x0010, 0x0020);
const BODY_PART: Tag = (0x0018, 0x0015);
const CINE_RATE: Tag = (0x0018, 0x0040);
const FRAME_TIME: Tag = (0x0018, 0x1063);
const SAMPLES_PER_PIXEL: Tag = (0x0028, 0x0002);
const PHOTOMETRIC: Tag = (0x0028, 0x0004);
const PLANAR_CONFIGURATION: Tag = (0x0028, 0x0006);
const NUMBER_OF_FRAMES: Tag = (0x0028, 0x0008);
const ROWS: Tag = (0x0028, 0x0010);
const COLUMNS: Tag = (0x0028, 0x0011);
const BITS_ALLOCATED: Tag = (0x0028, 0x0100);
const BITS_STORED: Tag = (0x0028, 0x0101);
const HIGH_BIT: Tag = (0x0028, 0x0102);
const PIXEL_REPRESENTATION: Tag = (0x0028, 0x0103);
const PIXEL_DATA: Tag = (0x7FE0, 0x0010);

const ITEM: Tag = (0xFFFE, 0xE000);
const ITEM_DELIMITER: Tag = (0xFFFE, 0xE00D);
const SEQUENCE_DELIMITER: Tag = (0xFFFE, 0xE0DD);
const UNDEFINED_LENGTH: u32 = 0xFFFF_FFFF;

/// Elements larger than this are skipped rather than buffered.
const MAX_BUFFERED_VALUE: u32 = 1 << 16;

fn has_long_length(vr: &[u8; 2]) -> bool {
    matches!(
        vr,
        b"OB" | b"OD" | b"OF" | b"OL" | b"OV" | b"OW" | b"SQ" | b"SV" | b"UC" | b"UN" | b"UR" | b"UT" | b"UV"
    )
}

fn corrupt(msg: impl Into<String>) -> IngestError {
    IngestError::CorruptHeader(msg.into())
}

pub(crate) fn has_magic(path: &Path) -> Result<bool, IngestError> {
    let mut f = File::open(path).map_err(|source| IngestError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })?;
    let mut head = [0u8; PREAMBLE_LEN + 4];
    match f.read_exact(&mut head) {
        Ok(()) => Ok(&head[PREAMBLE_LEN..] == MAGIC),
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(false),
        Err(source) => Err(IngestError::UnreadableFile {
            path: path.to_path_buf(),
            source,
        }),
    }
}

struct Header {
    values: BTreeMap<Tag, Vec<u8>>,
    pixel_offset: u64,
    pixel_len: u32,
}

struct ElementHeader {
    tag: Tag,
    vr: [u8; 2],
    len: u32,
}

fn read_u16<R: Read>(r: &mut R) -> std::io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_tag<R: Read>(r: &mut R) -> std::io::Result<Tag> {
    Ok((read_u16(r)?, read_u16(r)?))
}

fn read_element_header<R: Read>(r: &mut R) -> Result<Option<ElementHeader>, IngestError> {
    let tag = match read_tag(r) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(corrupt(format!("element tag: {e}"))),
    };
    let eof = |e: std::io::Error| corrupt(format!("element ({:04X},{:04X}): {e}", tag.0, tag.1));
    if tag.0 == 0xFFFE {
        // Item tags carry no VR.
        let len = read_u32(r).map_err(eof)?;
        return Ok(Some(ElementHeader { tag, vr: *b"  ", len }));
    }
    let mut vr = [0u8; 2];
    r.read_exact(&mut vr).map_err(eof)?;
    if !vr.iter().all(u8::is_ascii_uppercase) {
        return Err(corrupt(format!(
            "element ({:04X},{:04X}) has no explicit VR",
            tag.0, tag.1
        )));
    }
    let len = if has_long_length(&vr) {
        read_u16(r).map_err(eof)?;
        read_u32(r).map_err(eof)?
    } else {
        u32::from(read_u16(r).map_err(eof)?)
    };
    Ok(Some(ElementHeader { tag, vr, len }))
}

fn skip<R: Seek>(r: &mut R, len: u32) -> Result<(), IngestError> {
    r.seek(SeekFrom::Current(i64::from(len)))
        .map_err(|e| corrupt(format!("seek: {e}")))?;
    Ok(())
}

/// Skip an undefined-length sequence, including nested sequences.
fn skip_undefined_sequence<R: Read + Seek>(r: &mut R) -> Result<(), IngestError> {
    loop {
        let tag = read_tag(r).map_err(|e| corrupt(format!("sequence: {e}")))?;
        let len = read_u32(r).map_err(|e| corrupt(format!("sequence: {e}")))?;
        match tag {
            SEQUENCE_DELIMITER => return Ok(()),
            ITEM if len == UNDEFINED_LENGTH => skip_undefined_item(r)?,
            ITEM => skip(r, len)?,
            other => {
                return Err(corrupt(format!(
                    "unexpected ({:04X},{:04X}) inside sequence",
                    other.0, other.1
                )))
            }
        }
    }
}

fn skip_undefined_item<R: Read + Seek>(r: &mut R) -> Result<(), IngestError> {
    loop {
        let el = read_element_header(r)?.ok_or_else(|| corrupt("unterminated item"))?;
        if el.tag == ITEM_DELIMITER {
            return Ok(());
        }
        if el.len == UNDEFINED_LENGTH {
            if &el.vr == b"SQ" || &el.vr == b"UN" {
                skip_undefined_sequence(r)?;
            } else {
                return Err(corrupt("undefined length on a non-sequence element"));
            }
        } else {
            skip(r, el.len)?;
        }
    }
}

fn read_header<R: Read + Seek>(r: &mut R) -> Result<Header, IngestError> {
    let mut head = [0u8; PREAMBLE_LEN + 4];
    r.read_exact(&mut head)
        .map_err(|e| corrupt(format!("preamble: {e}")))?;
    if &head[PREAMBLE_LEN..] != MAGIC {
        return Err(corrupt("missing DICM magic"));
    }
    let mut values = BTreeMap::new();
    let mut checked_syntax = false;
    loop {
        let el = read_element_header(r)?.ok_or_else(|| corrupt("no pixel data element"))?;
        if el.tag.0 != 0x0002 && !checked_syntax {
            check_transfer_syntax(values.get(&TRANSFER_SYNTAX))?;
            checked_syntax = true;
        }
        if el.tag == PIXEL_DATA {
            if el.len == UNDEFINED_LENGTH {
                // Encapsulated fragments only occur with compressed syntaxes.
                return Err(IngestError::UnsupportedTransferSyntax(
                    "encapsulated pixel data".into(),
                ));
            }
            let pixel_offset = r
                .stream_position()
                .map_err(|e| corrupt(format!("position: {e}")))?;
            return Ok(Header {
                values,
                pixel_offset,
                pixel_len: el.len,
            });
        }
        if el.len == UNDEFINED_LENGTH {
            if &el.vr == b"SQ" || &el.vr == b"UN" {
                skip_undefined_sequence(r)?;
                continue;
            }
            return Err(corrupt(format!(
                "undefined length on ({:04X},{:04X})",
                el.tag.0, el.tag.1
            )));
        }
        if el.len <= MAX_BUFFERED_VALUE && &el.vr != b"SQ" {
            let mut buf = vec![0u8; el.len as usize];
            r.read_exact(&mut buf)
                .map_err(|e| corrupt(format!("value of ({:04X},{:04X}): {e}", el.tag.0, el.tag.1)))?;
            values.insert(el.tag, buf);
        } else {
            skip(r, el.len)?;
        }
    }
}

fn check_transfer_syntax(raw: Option<&Vec<u8>>) -> Result<(), IngestError> {
    let raw = raw.ok_or_else(|| corrupt("missing transfer syntax"))?;
    let ts = text(raw);
    if ts == EXPLICIT_VR_LITTLE_ENDIAN {
        Ok(())
    } else {
        Err(IngestError::UnsupportedTransferSyntax(ts))
    }
}

fn text(raw: &[u8]) -> String {
    String::from_utf8_lossy(raw)
        .trim_matches(|c: char| c == '\0' || c.is_whitespace())
        .to_string()
}

fn first_value(raw: &[u8]) -> String {
    text(raw).split('\\').next().unwrap_or("").trim().to_string()
}

impl Header {
    fn text(&self, tag: Tag) -> Option<String> {
        self.values.get(&tag).map(|v| text(v))
    }

    fn us(&self, tag: Tag, name: &str) -> Result<u16, IngestError> {
        let raw = self
            .values
            .get(&tag)
            .ok_or_else(|| corrupt(format!("missing {name}")))?;
        if raw.len() < 2 {
            return Err(corrupt(format!("{name} too short")));
        }
        Ok(u16::from_le_bytes([raw[0], raw[1]]))
    }

    fn number(&self, tag: Tag) -> Option<f64> {
        self.values
            .get(&tag)
            .and_then(|v| first_value(v).parse::<f64>().ok())
    }

    fn meta(&self, path: &Path) -> Result<(VideoMeta, bool), IngestError> {
        let spp = self.us(SAMPLES_PER_PIXEL, "SamplesPerPixel")?;
        let photometric = self.text(PHOTOMETRIC).unwrap_or_default();
        let color = match (spp, photometric.as_str()) {
            (1, "MONOCHROME2") => ColorKind::Gray8,
            (3, "RGB") => ColorKind::Rgb8,
            (s, p) => {
                return Err(corrupt(format!(
                    "unsupported pixel layout: {s} samples, photometric {p:?}"
                )))
            }
        };
        let bits = self.us(BITS_ALLOCATED, "BitsAllocated")?;
        if bits != 8 {
            return Err(corrupt(format!("{bits} bits allocated, only 8 supported")));
        }
        if self.values.contains_key(&PIXEL_REPRESENTATION) && self.us(PIXEL_REPRESENTATION, "PixelRepresentation")? != 0 {
            return Err(corrupt("signed pixel data not supported"));
        }
        let planar = color == ColorKind::Rgb8
            && self.values.contains_key(&PLANAR_CONFIGURATION)
            && self.us(PLANAR_CONFIGURATION, "PlanarConfiguration")? == 1;
        let height = usize::from(self.us(ROWS, "Rows")?);
        let width = usize::from(self.us(COLUMNS, "Columns")?);
        let frame_count = match self.number(NUMBER_OF_FRAMES) {
            Some(n) if n >= 1.0 && n.fract() == 0.0 => n as usize,
            Some(n) => return Err(corrupt(format!("NumberOfFrames {n}"))),
            None => 1,
        };
        let fps = match (self.number(CINE_RATE), self.number(FRAME_TIME)) {
            (Some(rate), _) if rate > 0.0 => rate,
            (_, Some(ms)) if ms > 0.0 => 1000.0 / ms,
            _ => {
                log::warn!(
                    "{}: no frame rate metadata, assuming {DEFAULT_FPS} fps",
                    path.display()
                );
                DEFAULT_FPS
            }
        };
        let meta = VideoMeta {
            video_id: self.text(SERIES_DESCRIPTION).filter(|s| !s.is_empty()).unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            }),
            individual_id: self.text(PATIENT_ID).unwrap_or_default(),
            site: Site::parse(&self.text(BODY_PART).unwrap_or_default()),
            fps,
            frame_count,
            width,
            height,
            color,
        };
        Ok((meta, planar))
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::UnreadableFile {
            path: path.to_path_buf(),
            source,
        })
}

pub fn probe(path: &Path) -> Result<VideoMeta, IngestError> {
    let mut r = open(path)?;
    let header = read_header(&mut r)?;
    Ok(header.meta(path)?.0)
}

pub fn load(path: &Path) -> Result<FrameVolume, IngestError> {
    let mut r = open(path)?;
    let header = read_header(&mut r)?;
    let (meta, planar) = header.meta(path)?;
    let expected = meta.frame_len() * meta.frame_count;
    if (header.pixel_len as usize) < expected {
        return Err(IngestError::PixelDataTruncated {
            expected,
            found: header.pixel_len as usize,
        });
    }
    r.seek(SeekFrom::Start(header.pixel_offset))
        .map_err(|e| corrupt(format!("seek: {e}")))?;
    let mut pixels = Vec::with_capacity(expected);
    r.take(expected as u64)
        .read_to_end(&mut pixels)
        .map_err(|source| IngestError::UnreadableFile {
            path: path.to_path_buf(),
            source,
        })?;
    if pixels.len() < expected {
        return Err(IngestError::PixelDataTruncated {
            expected,
            found: pixels.len(),
        });
    }
    if planar {
        pixels = interleave_planes(&pixels, meta.width * meta.height);
    }
    FrameVolume::new(meta, pixels)
}

fn interleave_planes(planar: &[u8], plane: usize) -> Vec<u8> {
    let mut out = vec![0u8; planar.len()];
    for (frame_in, frame_out) in planar.chunks_exact(plane * 3).zip(out.chunks_exact_mut(plane * 3)) {
        for p in 0..plane {
            for c in 0..3 {
                frame_out[p * 3 + c] = frame_in[c * plane + p];
            }
        }
    }
    out
}

/// Knobs for [`encode`]. The defaults produce a file this module reads.
#[derive(Debug, Clone)]
pub struct WriteOptions {
    pub transfer_syntax: String,
    /// Write CineRate/FrameTime.
    pub write_frame_rate: bool,
    /// Wrap pixel data in undefined-length fragments, as compressed
    /// syntaxes do.
    pub encapsulate: bool,
}

impl Default for WriteOptions {
    fn default() -> Self {
        WriteOptions {
            transfer_syntax: EXPLICIT_VR_LITTLE_ENDIAN.to_string(),
            write_frame_rate: true,
            encapsulate: false,
        }
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn element(&mut self, tag: Tag, vr: &[u8; 2], value: &[u8]) {
        let pad = value.len() % 2;
        let len = (value.len() + pad) as u32;
        self.buf.extend_from_slice(&tag.0.to_le_bytes());
        self.buf.extend_from_slice(&tag.1.to_le_bytes());
        self.buf.extend_from_slice(vr);
        if has_long_length(vr) {
            self.buf.extend_from_slice(&[0, 0]);
            self.buf.extend_from_slice(&len.to_le_bytes());
        } else {
            self.buf.extend_from_slice(&(len as u16).to_le_bytes());
        }
        self.buf.extend_from_slice(value);
        if pad == 1 {
            let filler = if vr == b"UI" || vr == b"OB" { 0 } else { b' ' };
            self.buf.push(filler);
        }
    }

    fn string(&mut self, tag: Tag, vr: &[u8; 2], value: &str) {
        self.element(tag, vr, value.as_bytes());
    }

    fn us(&mut self, tag: Tag, value: u16) {
        self.element(tag, b"US", &value.to_le_bytes());
    }
}

fn instance_uid(meta: &VideoMeta) -> String {
    let seed = crate::seed::derive(0, &[meta.individual_id.as_bytes(), meta.video_id.as_bytes()]);
    format!("2.25.{seed}")
}

fn format_ds(value: f64) -> String {
    let mut s = format!("{value}");
    if s.len() > 16 {
        s = format!("{value:.10}");
        s.truncate(16);
    }
    s
}

/// Serialize a volume as a DICOM Part 10 byte stream.
pub fn encode(volume: &FrameVolume, opts: &WriteOptions) -> Vec<u8> {
    let meta = &volume.meta;
    let uid = instance_uid(meta);

    let mut group = Writer { buf: Vec::new() };
    group.element((0x0002, 0x0001), b"OB", &[0, 1]);
    group.string((0x0002, 0x0002), b"UI", US_MULTIFRAME_STORAGE);
    group.string((0x0002, 0x0003), b"UI", &uid);
    group.string(TRANSFER_SYNTAX, b"UI", &opts.transfer_syntax);
    group.string((0x0002, 0x0012), b"UI", IMPLEMENTATION_UID);
    group.string((0x0002, 0x0013), b"SH", "VDAMAGE_0_1");

    let mut w = Writer {
        buf: vec![0u8; PREAMBLE_LEN],
    };
    w.buf.extend_from_slice(MAGIC);
    w.element((0x0002, 0x0000), b"UL", &(group.buf.len() as u32).to_le_bytes());
    w.buf.extend_from_slice(&group.buf);

    w.string(SOP_CLASS, b"UI", US_MULTIFRAME_STORAGE);
    w.string(SOP_INSTANCE, b"UI", &uid);
    w.string(MODALITY, b"CS", "US");
    w.string(SERIES_DESCRIPTION, b"LO", &meta.video_id);
    w.string(PATIENT_ID, b"LO", &meta.individual_id);
    w.string(BODY_PART, b"CS", meta.site.as_str());
    if opts.write_frame_rate {
        if meta.fps.fract() == 0.0 {
            w.string(CINE_RATE, b"IS", &format!("{}", meta.fps as u64));
        }
        w.string(FRAME_TIME, b"DS", &format_ds(1000.0 / meta.fps));
    }
    let (spp, photometric) = match meta.color {
        ColorKind::Gray8 => (1, "MONOCHROME2"),
        ColorKind::Rgb8 => (3, "RGB"),
    };
    w.us(SAMPLES_PER_PIXEL, spp);
    w.string(PHOTOMETRIC, b"CS", photometric);
    if meta.color == ColorKind::Rgb8 {
        w.us(PLANAR_CONFIGURATION, 0);
    }
    w.string(NUMBER_OF_FRAMES, b"IS", &meta.frame_count.to_string());
    w.us(ROWS, meta.height as u16);
    w.us(COLUMNS, meta.width as u16);
    w.us(BITS_ALLOCATED, 8);
    w.us(BITS_STORED, 8);
    w.us(HIGH_BIT, 7);
    w.us(PIXEL_REPRESENTATION, 0);

    if opts.encapsulate {
        w.buf.extend_from_slice(&PIXEL_DATA.0.to_le_bytes());
        w.buf.extend_from_slice(&PIXEL_DATA.1.to_le_bytes());
        w.buf.extend_from_slice(b"OB\0\0");
        w.buf.extend_from_slice(&UNDEFINED_LENGTH.to_le_bytes());
        // Empty basic offset table, one fragment, delimiter.
        for (tag, payload) in [(ITEM, &[][..]), (ITEM, volume.pixels())] {
            w.buf.extend_from_slice(&tag.0.to_le_bytes());
            w.buf.extend_from_slice(&tag.1.to_le_bytes());
            let padded = payload.len() + payload.len() % 2;
            w.buf.extend_from_slice(&(padded as u32).to_le_bytes());
            w.buf.extend_from_slice(payload);
            if payload.len() % 2 == 1 {
                w.buf.push(0);
            }
        }
        w.buf.extend_from_slice(&SEQUENCE_DELIMITER.0.to_le_bytes());
        w.buf.extend_from_slice(&SEQUENCE_DELIMITER.1.to_le_bytes());
        w.buf.extend_from_slice(&0u32.to_le_bytes());
    } else {
        w.element(PIXEL_DATA, b"OB", volume.pixels());
    }
    w.buf
}

pub fn write(volume: &FrameVolume, path: &Path) -> Result<(), IngestError> {
    write_with(volume, path, &WriteOptions::default())
}

pub fn write_with(volume: &FrameVolume, path: &Path, opts: &WriteOptions) -> Result<(), IngestError> {
    std::fs::write(path, encode(volume, opts)).map_err(|source| IngestError::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn volume(color: ColorKind, frames: usize) -> FrameVolume {
        let meta = VideoMeta {
            video_id: "vid-7".into(),
            individual_id: "ind-3".into(),
            site: Site::IcaL,
            fps: 25.0,
            frame_count: frames,
            width: 65,
            height: 64,
            color,
        };
        let n = meta.frame_len() * frames;
        let pixels = (0..n).map(|i| (i * 31 % 251) as u8).collect();
        FrameVolume::new(meta, pixels).unwrap()
    }

    #[test]
    fn cine_rate_and_frame_count_are_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.dcm");
        let mut v = volume(ColorKind::Gray8, 75);
        v.meta.fps = 25.0;
        write(&v, &p).unwrap();
        let meta = probe(&p).unwrap();
        assert_eq!(meta.fps, 25.0);
        assert_eq!(meta.frame_count, 75);
        assert_eq!(meta.site, Site::IcaL);
        assert_eq!(meta.video_id, "vid-7");
        assert_eq!(meta.individual_id, "ind-3");
    }

    #[test]
    fn round_trip_gray_and_rgb() {
        let dir = tempfile::tempdir().unwrap();
        for color in [ColorKind::Gray8, ColorKind::Rgb8] {
            let p = dir.path().join("rt.dcm");
            let v = volume(color, 3);
            write(&v, &p).unwrap();
            assert_eq!(load(&p).unwrap(), v);
        }
    }

    #[test]
    fn missing_frame_rate_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nofps.dcm");
        let opts = WriteOptions {
            write_frame_rate: false,
            ..WriteOptions::default()
        };
        write_with(&volume(ColorKind::Gray8, 2), &p, &opts).unwrap();
        assert_eq!(probe(&p).unwrap().fps, DEFAULT_FPS);
    }

    #[test]
    fn compressed_syntaxes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("jpeg.dcm");
        let opts = WriteOptions {
            transfer_syntax: JPEG_BASELINE.into(),
            encapsulate: true,
            ..WriteOptions::default()
        };
        write_with(&volume(ColorKind::Rgb8, 2), &p, &opts).unwrap();
        match load(&p) {
            Err(IngestError::UnsupportedTransferSyntax(ts)) => assert_eq!(ts, JPEG_BASELINE),
            other => panic!("unexpected {other:?}"),
        }
        // Encapsulated data is rejected even when the syntax lies.
        let opts = WriteOptions {
            encapsulate: true,
            ..WriteOptions::default()
        };
        write_with(&volume(ColorKind::Rgb8, 2), &p, &opts).unwrap();
        assert!(matches!(load(&p), Err(IngestError::UnsupportedTransferSyntax(_))));
        let opts = WriteOptions {
            transfer_syntax: IMPLICIT_VR_LITTLE_ENDIAN.into(),
            ..WriteOptions::default()
        };
        write_with(&volume(ColorKind::Gray8, 2), &p, &opts).unwrap();
        assert!(matches!(load(&p), Err(IngestError::UnsupportedTransferSyntax(_))));
    }

    #[test]
    fn truncated_pixel_data() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cut.dcm");
        let mut bytes = encode(&volume(ColorKind::Gray8, 4), &WriteOptions::default());
        bytes.truncate(bytes.len() - 100);
        std::fs::write(&p, bytes).unwrap();
        // Metadata is still readable.
        assert_eq!(probe(&p).unwrap().frame_count, 4);
        assert!(matches!(load(&p), Err(IngestError::PixelDataTruncated { .. })));
    }

    #[test]
    fn truncated_header_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("hdr.dcm");
        let bytes = encode(&volume(ColorKind::Gray8, 1), &WriteOptions::default());
        std::fs::write(&p, &bytes[..200]).unwrap();
        assert!(matches!(probe(&p), Err(IngestError::CorruptHeader(_))));
    }

    #[test]
    fn planar_rgb_is_interleaved() {
        let planar = [1, 2, 10, 20, 100, 200];
        assert_eq!(interleave_planes(&planar, 2), vec![1, 10, 100, 2, 20, 200]);
    }
}
