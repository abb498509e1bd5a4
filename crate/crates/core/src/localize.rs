//! Merging surviving components into text regions and emitting their boxes.

use std::collections::BTreeSet;

use crate::binarize::BinaryImage;
use crate::components::{label_components, Component, LabelMap, Rect};
use crate::morphology::{dilate, StructuringElement};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextRegion {
    pub bbox: Rect,
    /// Labels of the input components that fall inside this region.
    pub member_labels: BTreeSet<u32>,
}

/// Masks produced while merging, kept for stage snapshots.
#[derive(Debug, Clone)]
pub struct MergeResult {
    /// Pixels of the surviving components.
    pub canvas: BinaryImage,
    /// `canvas` after gap-filling dilation.
    pub filled: BinaryImage,
    pub regions: Vec<TextRegion>,
}

/// Rasterizes `components` from `labels`, dilates with `fill_se`, and
/// relabels with 8-connectivity; each resulting region becomes a `TextRegion`
/// with its tight bounding box.
pub fn merge_detections(
    labels: &LabelMap,
    components: &[Component],
    fill_se: &StructuringElement,
) -> Vec<TextRegion> {
    merge_detections_with_masks(labels, components, fill_se).regions
}

pub fn merge_detections_with_masks(
    labels: &LabelMap,
    components: &[Component],
    fill_se: &StructuringElement,
) -> MergeResult {
    let (w, h) = (labels.width(), labels.height());
    let mut keep = vec![false; labels.max_label() as usize + 1];
    for c in components {
        if let Some(slot) = keep.get_mut(c.label as usize) {
            *slot = true;
        }
    }
    let canvas = BinaryImage::from_fn(w, h, |x, y| {
        let l = labels.get(x, y);
        l != 0 && keep[l as usize]
    });
    let filled = dilate(&canvas, fill_se);
    let (region_map, region_components) = label_components(&filled);

    let mut regions: Vec<TextRegion> = region_components
        .iter()
        .map(|r| TextRegion {
            bbox: r.bbox,
            member_labels: BTreeSet::new(),
        })
        .collect();
    for y in 0..h {
        for x in 0..w {
            if canvas.get(x, y) {
                let region = region_map.get(x, y);
                regions[region as usize - 1]
                    .member_labels
                    .insert(labels.get(x, y));
            }
        }
    }
    MergeResult {
        canvas,
        filled,
        regions,
    }
}

/// Region boxes ordered by `(y, x)`. Duplicates are kept.
pub fn localize(regions: &[TextRegion]) -> Vec<Rect> {
    let mut boxes: Vec<Rect> = regions.iter().map(|r| r.bbox).collect();
    boxes.sort_by_key(|b| (b.y, b.x));
    boxes
}
