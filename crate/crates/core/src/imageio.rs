//! Raster and annotation I/O.
//!
//! Images are binary portable pixmaps: `P5` graymaps and `P6` pixmaps with a
//! maxval of 255. Annotation files hold one `x y w h` box per line.

use std::fs;
use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};

use crate::components::Rect;
use crate::error::{Error, Result};

/// 8-bit single-channel raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} image needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Sample with out-of-range coordinates clamped to the nearest edge pixel.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn min_max(&self) -> (u8, u8) {
        self.data
            .iter()
            .fold((u8::MAX, u8::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// 8-bit interleaved RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != 3 * width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} RGB image needs {} bytes, got {}",
                3 * width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Replicates each gray sample into all three channels.
    pub fn from_gray(img: &GrayImage) -> Self {
        let data = img.data().iter().flat_map(|&v| [v, v, v]).collect();
        Self {
            width: img.width(),
            height: img.height(),
            data,
        }
    }
}

/// A decoded input raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Image {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl Image {
    pub fn width(&self) -> usize {
        match self {
            Image::Gray(g) => g.width(),
            Image::Rgb(c) => c.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Image::Gray(g) => g.height(),
            Image::Rgb(c) => c.height(),
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        match self {
            Image::Gray(g) => g.clone(),
            Image::Rgb(c) => to_grayscale(c),
        }
    }
}

impl From<GrayImage> for Image {
    fn from(img: GrayImage) -> Self {
        Image::Gray(img)
    }
}

impl From<RgbImage> for Image {
    fn from(img: RgbImage) -> Self {
        Image::Rgb(img)
    }
}

/// BT.601 luma, `round(0.299 R + 0.587 G + 0.114 B)` with halves rounded up.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let data = img
        .data()
        .chunks_exact(3)
        .map(|px| {
            let weighted = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
            ((weighted + 500) / 1000).min(255) as u8
        })
        .collect();
    GrayImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{what} out of range")))
    }
}

/// Decodes a P5 or P6 pixmap from an in-memory buffer.
pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 {
        return Err(Error::MalformedHeader("missing magic number".into()));
    }
    let magic = &bytes[..2];
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::UnsupportedMagic(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        return Err(Error::MalformedHeader(
            "magic number must be followed by whitespace".into(),
        ));
    }
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => {
            return Err(Error::MalformedHeader(
                "maxval must be followed by a single whitespace byte".into(),
            ))
        }
        None => {
            return Err(Error::TruncatedPayload {
                expected: channels * width * height,
                actual: 0,
            })
        }
    }

    let expected = channels * width * height;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            actual: payload.len(),
        });
    }
    let data = payload[..expected].to_vec();
    Ok(match channels {
        1 => Image::Gray(GrayImage {
            width,
            height,
            data,
        }),
        _ => Image::Rgb(RgbImage {
            width,
            height,
            data,
        }),
    })
}

pub fn load_image(mut source: impl Read) -> Result<Image> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode_pnm(&bytes)
}

pub fn load_image_file(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::from(e).at_path(path))?;
    decode_pnm(&bytes).map_err(|e| e.at_path(path))
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::from(e).at_path(path))
}

pub fn save_ppm(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(img)).map_err(|e| Error::from(e).at_path(path))
}

/// Image files of a directory, ordered by file name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameSequence {
    pub frames: Vec<PathBuf>,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

pub fn is_supported_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "ppm" | "pnm"))
        .unwrap_or(false)
}

pub fn load_frame_sequence(dir: impl AsRef<Path>) -> Result<FrameSequence> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::from(e).at_path(dir))?;
    let mut frames = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::from(e).at_path(dir))?;
        let path = entry.path();
        if path.is_file() && is_supported_image(&path) {
            frames.push(path);
        }
    }
    frames.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(FrameSequence { frames })
}

fn parse_rect_line(line: &str, lineno: usize) -> Result<Rect> {
    let err = |message: String| Error::Annotation {
        line: lineno,
        message,
    };
    let tokens: Vec<&str> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.len() != 4 {
        return Err(err(format!("expected 4 fields, found {}", tokens.len())));
    }
    let mut vals = [0i64; 4];
    for (v, tok) in vals.iter_mut().zip(&tokens) {
        *v = tok
            .parse()
            .map_err(|_| err(format!("{tok:?} is not an integer")))?;
    }
    let [x, y, w, h] = vals;
    if x < 0 || y < 0 {
        return Err(err(format!("negative origin ({x}, {y})")));
    }
    if w < 1 || h < 1 {
        return Err(err(format!("extent {w}x{h} must be at least 1x1")));
    }
    let fit = |v: i64| u32::try_from(v).map_err(|_| err(format!("{v} out of range")));
    Ok(Rect::new(fit(x)?, fit(y)?, fit(w)?, fit(h)?))
}

/// Parses `x y w h` records; blank lines and `#` comments are skipped.
pub fn load_annotations(source: impl BufRead) -> Result<Vec<Rect>> {
    let mut rects = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        rects.push(parse_rect_line(trimmed, i + 1)?);
    }
    Ok(rects)
}

pub fn load_annotation_file(path: impl AsRef<Path>) -> Result<Vec<Rect>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::from(e).at_path(path))?;
    load_annotations(std::io::BufReader::new(file)).map_err(|e| e.at_path(path))
}

pub fn write_detections(boxes: &[Rect], mut sink: impl Write) -> Result<()> {
    for b in boxes {
        writeln!(sink, "{} {} {} {}", b.x, b.y, b.w, b.h)?;
    }
    Ok(())
}

/// Splits a multi-frame detection file into `(frame name, boxes)` sections.
///
/// Sections start at `# frame <name>` lines. Records before the first header
/// belong to an unnamed section, which is omitted when empty.
pub fn load_frame_sections(source: impl BufRead) -> Result<Vec<(Option<String>, Vec<Rect>)>> {
    let mut sections: Vec<(Option<String>, Vec<Rect>)> = vec![(None, Vec::new())];
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix("# frame ") {
            sections.push((Some(name.trim().to_string()), Vec::new()));
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rect = parse_rect_line(trimmed, i + 1)?;
        sections.last_mut().expect("non-empty").1.push(rect);
    }
    if sections[0].1.is_empty() {
        sections.remove(0);
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn gray(img: Image) -> GrayImage {
        match img {
            Image::Gray(g) => g,
            other => panic!("expected gray image, got {other:?}"),
        }
    }

    #[test]
    fn decodes_p5() {
        let mut bytes = b"P5 2 2 255 ".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 7]);
        let img = gray(decode_pnm(&bytes).unwrap());
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.data(), &[0, 128, 255, 7]);
    }

    #[test]
    fn decodes_p6() {
        let mut bytes = b"P6\n1 1\n255\n".to_vec();
        bytes.extend_from_slice(&[10, 20, 30]);
        match decode_pnm(&bytes).unwrap() {
            Image::Rgb(c) => assert_eq!(c.pixel(0, 0), [10, 20, 30]),
            other => panic!("expected rgb, got {other:?}"),
        }
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n3 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(gray(decode_pnm(&bytes).unwrap()).data(), &[1, 2, 3]);
    }

    #[test]
    fn payload_bytes_that_look_like_whitespace_are_data() {
        let mut bytes = b"P5 2 1 255\n".to_vec();
        bytes.extend_from_slice(b"\n ");
        assert_eq!(gray(decode_pnm(&bytes).unwrap()).data(), &[10, 32]);
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = b"P5 2 2 255 ".to_vec();
        bytes.extend_from_slice(&[0, 1, 2]);
        assert!(matches!(
            decode_pnm(&bytes),
            Err(Error::TruncatedPayload {
                expected: 4,
                actual: 3
            })
        ));
    }

    #[test]
    fn header_errors_are_distinct() {
        assert!(matches!(
            decode_pnm(b"P2 1 1 255 \x00"),
            Err(Error::UnsupportedMagic(_))
        ));
        assert!(matches!(
            decode_pnm(b"P5 1 1 65535 \x00\x00"),
            Err(Error::UnsupportedMaxval(65535))
        ));
        assert!(matches!(
            decode_pnm(b"P5 x 1 255 \x00"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pnm(b"P5 0 1 255 "),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(decode_pnm(b"P"), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn luma_weights() {
        let img = RgbImage::new(3, 1, vec![255, 255, 255, 0, 0, 0, 255, 0, 0]).unwrap();
        assert_eq!(to_grayscale(&img).data(), &[255, 0, 76]);
    }

    #[test]
    fn gray_valued_rgb_maps_to_itself() {
        let data: Vec<u8> = (0..=255u8).flat_map(|v| [v, v, v]).collect();
        let img = RgbImage::new(256, 1, data).unwrap();
        let g = to_grayscale(&img);
        assert!(g.data().iter().enumerate().all(|(i, &v)| v as usize == i));
    }

    #[test]
    fn annotation_parsing() {
        let rects = load_annotations(Cursor::new("10 20 30 5\n")).unwrap();
        assert_eq!(rects, vec![Rect::new(10, 20, 30, 5)]);
        assert!(load_annotations(Cursor::new("")).unwrap().is_empty());

        let mixed = "# header\n\n1,2,3,4\n5 6, 7 8\n";
        assert_eq!(
            load_annotations(Cursor::new(mixed)).unwrap(),
            vec![Rect::new(1, 2, 3, 4), Rect::new(5, 6, 7, 8)]
        );
    }

    #[test]
    fn annotation_errors_name_the_line() {
        match load_annotations(Cursor::new("10 20 0 5")) {
            Err(Error::Annotation { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match load_annotations(Cursor::new("1 2 3 4\n1 2 three 4\n")) {
            Err(Error::Annotation { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_annotations(Cursor::new("1 2 3")).is_err());
        assert!(load_annotations(Cursor::new("-1 2 3 4")).is_err());
    }

    #[test]
    fn detection_output_format() {
        let mut out = Vec::new();
        write_detections(&[], &mut out).unwrap();
        assert!(out.is_empty());
        write_detections(&[Rect::new(1, 2, 3, 4)], &mut out).unwrap();
        assert_eq!(out, b"1 2 3 4\n");
    }

    #[test]
    fn frame_sections() {
        let text = "# frame a.pgm\n1 1 2 2\n# frame b.pgm\n# frame c.pgm\n0 0 1 1\n3 3 1 1\n";
        let sections = load_frame_sections(Cursor::new(text)).unwrap();
        assert_eq!(sections.len(), 3);
        assert_eq!(sections[0].0.as_deref(), Some("a.pgm"));
        assert!(sections[1].1.is_empty());
        assert_eq!(sections[2].1.len(), 2);
    }

    #[test]
    fn frame_sequence_ordering_and_filtering() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_frame_sequence(dir.path()).unwrap().is_empty());
        for name in ["b.pgm", "a.pgm", "notes.txt", "c.PPM"] {
            fs::write(dir.path().join(name), b"").unwrap();
        }
        let seq = load_frame_sequence(dir.path()).unwrap();
        let names: Vec<_> = seq
            .frames
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert_eq!(names, ["a.pgm", "b.pgm", "c.PPM"]);
    }

    #[test]
    fn missing_directory_is_an_io_error() {
        let err = load_frame_sequence("/nonexistent/frames/dir").unwrap_err();
        assert!(err.is_io());
    }
}
