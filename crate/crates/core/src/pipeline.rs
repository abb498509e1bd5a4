//! End-to-end orchestration: grayscale, median filter, Sobel edge emphasis,
//! Otsu binarization, component bridging and pruning, gap filling, boxes.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::binarize::{apply_threshold, histogram, otsu_threshold, BinaryImage};
use crate::components::{
    label_components_with_edges, prune_low_edge_density, prune_small, Component, LabelMap, Rect,
};
use crate::edge::{edge_emphasize, sobel_gradients, MagnitudeMode};
use crate::error::{Error, Result};
use crate::imageio::{self, FrameSequence, GrayImage, Image, RgbImage};
use crate::localize::{localize, merge_detections_with_masks, TextRegion};
use crate::morphology::{dilate, StructuringElement};
use crate::preprocess::{median_filter, MedianConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub median_window: usize,
    pub magnitude_mode: MagnitudeMode,
    /// Dilation joining broken strokes before labeling.
    pub bridge_se: StructuringElement,
    /// Dilation filling gaps between surviving components.
    pub fill_se: StructuringElement,
    pub min_area_fraction: f64,
    pub min_edge_density: f64,
    /// Stage snapshots are written here when set.
    pub debug_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            median_window: 3,
            magnitude_mode: MagnitudeMode::Approx,
            bridge_se: StructuringElement::rect(3, 3).expect("odd"),
            fill_se: StructuringElement::rect(5, 1).expect("odd"),
            min_area_fraction: 0.20,
            min_edge_density: 0.10,
            debug_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        MedianConfig {
            window: self.median_window,
        }
        .validate()?;
        if !(self.min_area_fraction > 0.0 && self.min_area_fraction < 1.0) {
            return Err(Error::config(format!(
                "min_area_fraction must lie in (0, 1), got {}",
                self.min_area_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.min_edge_density) {
            return Err(Error::config(format!(
                "min_edge_density must lie in [0, 1], got {}",
                self.min_edge_density
            )));
        }
        Ok(())
    }

    /// Sets one option by name. Hyphens and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::config(format!("{key}: {v:?} is not a number")))
        };
        match key.trim().replace('-', "_").as_str() {
            "median_window" => {
                self.median_window = value
                    .parse()
                    .map_err(|_| Error::config(format!("{key}: {value:?} is not an integer")))?
            }
            "magnitude" | "magnitude_mode" => self.magnitude_mode = value.parse()?,
            "bridge_se" => self.bridge_se = value.parse()?,
            "fill_se" => self.fill_se = value.parse()?,
            "min_area_fraction" => self.min_area_fraction = parse_f64(value)?,
            "min_edge_density" => self.min_edge_density = parse_f64(value)?,
            "debug_dir" => self.debug_dir = Some(PathBuf::from(value)),
            other => return Err(Error::config(format!("unknown option {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment line.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigLine {
                line: i + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            self.set(key, value).map_err(|e| Error::ConfigLine {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_config_text(text)?;
        Ok(cfg)
    }

    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).at_path(path))?;
        Self::from_config_text(&text).map_err(|e| e.at_path(path))
    }
}

/// Every intermediate product of one pipeline run.
#[derive(Debug, Clone)]
pub struct Detection {
    pub gray: GrayImage,
    pub median: GrayImage,
    pub edges: GrayImage,
    pub threshold: u8,
    pub binary: BinaryImage,
    pub bridged: BinaryImage,
    pub labels: LabelMap,
    /// All labeled components before pruning.
    pub components: Vec<Component>,
    /// Components that survived both pruning rules.
    pub kept: Vec<Component>,
    pub filled: BinaryImage,
    pub regions: Vec<TextRegion>,
    pub boxes: Vec<Rect>,
}

/// Snapshot file names, in stage order.
pub const SNAPSHOT_NAMES: [&str; 8] = [
    "00_gray.pgm",
    "01_median.pgm",
    "02_edges.pgm",
    "03_binary.pgm",
    "04_bridged.pgm",
    "05_components.ppm",
    "06_regions.pgm",
    "07_overlay.ppm",
];

/// Runs every stage and keeps the intermediates. `debug_dir` is ignored here.
pub fn detect(img: &Image, cfg: &PipelineConfig) -> Result<Detection> {
    cfg.validate()?;
    let gray = img.to_gray();

    let median = median_filter(
        &gray,
        &MedianConfig {
            window: cfg.median_window,
        },
    )
    .map_err(|e| e.in_stage("median"))?;

    let gradients = sobel_gradients(&median, cfg.magnitude_mode);
    let edges = edge_emphasize(&gradients.magnitude);

    let threshold = otsu_threshold(&histogram(&edges)).map_err(|e| e.in_stage("binarize"))?;
    let binary = apply_threshold(&edges, threshold);

    let bridged = dilate(&binary, &cfg.bridge_se);
    let (labels, components) =
        label_components_with_edges(&bridged, &binary).map_err(|e| e.in_stage("components"))?;
    let kept = prune_low_edge_density(
        &prune_small(&components, cfg.min_area_fraction),
        cfg.min_edge_density,
    );

    let merged = merge_detections_with_masks(&labels, &kept, &cfg.fill_se);
    let boxes = localize(&merged.regions);

    Ok(Detection {
        gray,
        median,
        edges,
        threshold,
        binary,
        bridged,
        labels,
        components,
        kept,
        filled: merged.filled,
        regions: merged.regions,
        boxes,
    })
}

/// Detects text boxes, writing stage snapshots when `cfg.debug_dir` is set.
pub fn run_pipeline(img: &Image, cfg: &PipelineConfig) -> Result<Vec<Rect>> {
    let det = detect(img, cfg)?;
    if let Some(dir) = &cfg.debug_dir {
        write_snapshots(img, &det, dir).map_err(|e| e.in_stage("debug"))?;
    }
    Ok(det.boxes)
}

fn label_color(label: u32) -> [u8; 3] {
    // Multiplicative hash, brightened so no label renders near black.
    let h = label.wrapping_mul(0x9E37_79B1);
    [
        ((h >> 24) as u8) | 0x40,
        ((h >> 16) as u8) | 0x40,
        ((h >> 8) as u8) | 0x40,
    ]
}

/// Surviving components in distinct colors, pruned ones in dark gray.
pub fn render_components(det: &Detection) -> RgbImage {
    let (w, h) = (det.labels.width(), det.labels.height());
    let mut kept = vec![false; det.components.len() + 1];
    for c in &det.kept {
        kept[c.label as usize] = true;
    }
    let mut out = RgbImage::new(w, h, vec![0; 3 * w * h]).expect("positive dimensions");
    for y in 0..h {
        for x in 0..w {
            let l = det.labels.get(x, y);
            if l == 0 {
                continue;
            }
            let color = if kept[l as usize] {
                label_color(l)
            } else {
                [64, 64, 64]
            };
            out.put_pixel(x, y, color);
        }
    }
    out
}

/// Draws one-pixel red outlines of `boxes` over `img`.
pub fn render_overlay(img: &Image, boxes: &[Rect]) -> RgbImage {
    let mut out = match img {
        Image::Rgb(c) => c.clone(),
        Image::Gray(g) => RgbImage::from_gray(g),
    };
    const RED: [u8; 3] = [255, 0, 0];
    for b in boxes {
        let (x0, y0) = (b.x as usize, b.y as usize);
        let x1 = (b.right() as usize).min(out.width()) - 1;
        let y1 = (b.bottom() as usize).min(out.height()) - 1;
        for x in x0..=x1 {
            out.put_pixel(x, y0, RED);
            out.put_pixel(x, y1, RED);
        }
        for y in y0..=y1 {
            out.put_pixel(x0, y, RED);
            out.put_pixel(x1, y, RED);
        }
    }
    out
}

pub fn write_snapshots(img: &Image, det: &Detection, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::from(e).at_path(dir))?;
    let path = |i: usize| dir.join(SNAPSHOT_NAMES[i]);
    imageio::save_pgm(&det.gray, path(0))?;
    imageio::save_pgm(&det.median, path(1))?;
    imageio::save_pgm(&det.edges, path(2))?;
    imageio::save_pgm(&det.binary.to_gray(), path(3))?;
    imageio::save_pgm(&det.bridged.to_gray(), path(4))?;
    imageio::save_ppm(&render_components(det), path(5))?;
    imageio::save_pgm(&det.filled.to_gray(), path(6))?;
    imageio::save_ppm(&render_overlay(img, &det.boxes), path(7))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceOptions {
    /// Worker threads; 0 lets the thread pool choose.
    pub workers: usize,
    /// Abort on the first failing frame instead of recording and skipping it.
    pub strict: bool,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            strict: false,
        }
    }
}

#[derive(Debug)]
pub struct FrameOutcome {
    pub path: PathBuf,
    pub result: Result<Vec<Rect>>,
}

impl FrameOutcome {
    pub fn name(&self) -> String {
        frame_name(&self.path)
    }
}

pub fn frame_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn frame_stem(path: &Path) -> String {
    path.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| frame_name(path))
}

fn run_frame(path: &Path, cfg: &PipelineConfig) -> Result<Vec<Rect>> {
    let img = imageio::load_image_file(path).map_err(|e| e.in_stage("load"))?;
    let mut frame_cfg = cfg.clone();
    if let Some(dir) = &cfg.debug_dir {
        frame_cfg.debug_dir = Some(dir.join(frame_stem(path)));
    }
    run_pipeline(&img, &frame_cfg)
}

/// Runs the pipeline on every frame independently; outcomes keep frame order.
///
/// Frame snapshots go to `<debug_dir>/<frame stem>/`.
pub fn run_sequence(
    frames: &FrameSequence,
    cfg: &PipelineConfig,
    opts: &SequenceOptions,
) -> Result<Vec<FrameOutcome>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {} workers: {e}", opts.workers)))?;
    let outcomes: Vec<FrameOutcome> = pool.install(|| {
        frames
            .frames
            .par_iter()
            .map(|path| FrameOutcome {
                path: path.clone(),
                result: run_frame(path, cfg),
            })
            .collect()
    });
    if opts.strict {
        if let Some(pos) = outcomes.iter().position(|o| o.result.is_err()) {
            let failed = outcomes.into_iter().nth(pos).expect("position is in range");
            let err = failed.result.expect_err("outcome failed");
            return Err(err.at_path(failed.path));
        }
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.bridge_se.to_string(), "3x3");
        assert_eq!(cfg.fill_se.to_string(), "5x1");
        assert_eq!(cfg.magnitude_mode, MagnitudeMode::Approx);
    }

    #[test]
    fn config_text_overrides_defaults() {
        let text = "# tuned for small captions\nmedian_window = 5\nmagnitude = exact\nfill-se = 7x1\n\nmin_edge_density=0.2\n";
        let cfg = PipelineConfig::from_config_text(text).unwrap();
        assert_eq!(cfg.median_window, 5);
        assert_eq!(cfg.magnitude_mode, MagnitudeMode::Exact);
        assert_eq!(cfg.fill_se.width(), 7);
        assert_eq!(cfg.min_edge_density, 0.2);
        assert_eq!(cfg.min_area_fraction, 0.20);
    }

    #[test]
    fn config_errors_name_the_line() {
        let err = PipelineConfig::from_config_text("median_window = 3\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 2, .. }));
        assert!(err.is_config());
        let err = PipelineConfig::from_config_text("no equals sign").unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 1, .. }));
        assert!(PipelineConfig::from_config_text("fill_se = 4x1").is_err());
    }

    #[test]
    fn out_of_range_knobs_are_rejected() {
        let bad = [
            PipelineConfig {
                median_window: 2,
                ..Default::default()
            },
            PipelineConfig {
                min_area_fraction: 0.0,
                ..Default::default()
            },
            PipelineConfig {
                min_area_fraction: 1.0,
                ..Default::default()
            },
            PipelineConfig {
                min_edge_density: 1.5,
                ..Default::default()
            },
        ];
        let img = Image::Gray(GrayImage::filled(4, 4, 0));
        for cfg in &bad {
            assert!(cfg.validate().is_err());
            assert!(run_pipeline(&img, cfg).is_err());
        }
    }

    #[test]
    fn constant_images_give_no_boxes() {
        for v in [0, 255] {
            let img = Image::Gray(GrayImage::filled(64, 64, v));
            assert!(run_pipeline(&img, &PipelineConfig::default())
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn overlay_outlines_boxes() {
        let img = Image::Gray(GrayImage::filled(6, 6, 9));
        let out = render_overlay(&img, &[Rect::new(1, 1, 3, 2)]);
        assert_eq!(out.pixel(1, 1), [255, 0, 0]);
        assert_eq!(out.pixel(3, 2), [255, 0, 0]);
        assert_eq!(out.pixel(0, 0), [9, 9, 9]);
        assert_eq!(out.pixel(4, 1), [9, 9, 9]);
    }

    #[test]
    fn strict_mode_aborts_on_bad_frame() {
        let dir = tempfile::tempdir().unwrap();
        imageio::save_pgm(&GrayImage::filled(8, 8, 0), dir.path().join("a.pgm")).unwrap();
        fs::write(dir.path().join("b.pgm"), b"P5 8 8 255 \x00").unwrap();
        let frames = imageio::load_frame_sequence(dir.path()).unwrap();
        let cfg = PipelineConfig::default();

        let lenient = run_sequence(&frames, &cfg, &SequenceOptions::default()).unwrap();
        assert_eq!(lenient.len(), 2);
        assert!(lenient[0].result.is_ok());
        assert!(lenient[1].result.is_err());

        let strict = SequenceOptions {
            workers: 2,
            strict: true,
        };
        let err = run_sequence(&frames, &cfg, &strict).unwrap_err();
        assert!(matches!(err.root(), Error::TruncatedPayload { .. }));
    }
}
