//! 8-connected component labeling and the false-positive pruning rules.

use crate::binarize::BinaryImage;
use crate::error::{Error, Result};

/// Axis-aligned box; `(x, y)` is the top-left pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// One past the rightmost column.
    pub fn right(&self) -> u64 {
        self.x as u64 + self.w as u64
    }

    /// One past the bottom row.
    pub fn bottom(&self) -> u64 {
        self.y as u64 + self.h as u64
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        let x0 = self.x.max(other.x) as u64;
        let y0 = self.y.max(other.y) as u64;
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        x1.saturating_sub(x0) * y1.saturating_sub(y0)
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn contains_point(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && (x as u64) < self.right() && (y as u64) < self.bottom()
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.right() <= width as u64 && self.bottom() <= height as u64
    }
}

/// A labeled 8-connected foreground region.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub label: u32,
    pub area: u64,
    pub bbox: Rect,
    /// Pixels of this component that are set in the edge mask.
    pub edge_pixel_count: u64,
    /// `edge_pixel_count / bbox.area()`.
    pub edge_density: f64,
}

/// Per-pixel component labels; 0 is background, components are `1..=K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn max_label(&self) -> u32 {
        self.labels.iter().copied().max().unwrap_or(0)
    }
}

/// Disjoint-set forest over provisional labels.
struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new() -> Self {
        Self {
            parent: Vec::new(),
            rank: Vec::new(),
        }
    }

    fn make_set(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.rank.push(0);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (ka, kb) = (self.rank[ra as usize], self.rank[rb as usize]);
        if ka < kb {
            self.parent[ra as usize] = rb;
        } else if ka > kb {
            self.parent[rb as usize] = ra;
        } else {
            self.parent[rb as usize] = ra;
            self.rank[ra as usize] += 1;
        }
    }
}

/// Labels 8-connected regions, measuring edge pixels against the mask itself.
pub fn label_components(img: &BinaryImage) -> (LabelMap, Vec<Component>) {
    label_with_edges_unchecked(img, img)
}

/// Labels 8-connected regions of `img` and counts, per component, the pixels
/// set in `edge_mask`.
pub fn label_components_with_edges(
    img: &BinaryImage,
    edge_mask: &BinaryImage,
) -> Result<(LabelMap, Vec<Component>)> {
    if img.width() != edge_mask.width() || img.height() != edge_mask.height() {
        return Err(Error::DimensionMismatch(format!(
            "mask is {}x{}, edge mask is {}x{}",
            img.width(),
            img.height(),
            edge_mask.width(),
            edge_mask.height()
        )));
    }
    Ok(label_with_edges_unchecked(img, edge_mask))
}

fn label_with_edges_unchecked(
    img: &BinaryImage,
    edge_mask: &BinaryImage,
) -> (LabelMap, Vec<Component>) {
    let (w, h) = (img.width(), img.height());
    let src = img.mask();
    const NONE: u32 = u32::MAX;

    // First pass: provisional labels, recording equivalences among the
    // already-visited neighbours W, NW, N, NE.
    let mut provisional = vec![NONE; w * h];
    let mut sets = UnionFind::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !src[i] {
                continue;
            }
            let mut current = NONE;
            let visit = |nx: usize, ny: usize, current: &mut u32, sets: &mut UnionFind| {
                let n = provisional[ny * w + nx];
                if n == NONE {
                    return;
                }
                if *current == NONE {
                    *current = n;
                } else if *current != n {
                    sets.union(*current, n);
                }
            };
            if x > 0 {
                visit(x - 1, y, &mut current, &mut sets);
            }
            if y > 0 {
                if x > 0 {
                    visit(x - 1, y - 1, &mut current, &mut sets);
                }
                visit(x, y - 1, &mut current, &mut sets);
                if x + 1 < w {
                    visit(x + 1, y - 1, &mut current, &mut sets);
                }
            }
            if current == NONE {
                current = sets.make_set();
            }
            provisional[i] = current;
        }
    }

    // Second pass: resolve to final labels in raster first-encounter order.
    let mut final_of_root = vec![0u32; sets.parent.len()];
    let mut labels = vec![0u32; w * h];
    let mut components: Vec<Component> = Vec::new();
    let edges = edge_mask.mask();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if provisional[i] == NONE {
                continue;
            }
            let root = sets.find(provisional[i]);
            let mut label = final_of_root[root as usize];
            if label == 0 {
                label = components.len() as u32 + 1;
                final_of_root[root as usize] = label;
                components.push(Component {
                    label,
                    area: 0,
                    bbox: Rect::new(x as u32, y as u32, 1, 1),
                    edge_pixel_count: 0,
                    edge_density: 0.0,
                });
            }
            labels[i] = label;
            let c = &mut components[label as usize - 1];
            c.area += 1;
            if edges[i] {
                c.edge_pixel_count += 1;
            }
            extend_bbox(&mut c.bbox, x as u32, y as u32);
        }
    }
    for c in &mut components {
        c.edge_density = c.edge_pixel_count as f64 / c.bbox.area() as f64;
    }

    (
        LabelMap {
            width: w,
            height: h,
            labels,
        },
        components,
    )
}

fn extend_bbox(b: &mut Rect, x: u32, y: u32) {
    let x0 = b.x.min(x);
    let y0 = b.y.min(y);
    let x1 = (b.x + b.w).max(x + 1);
    let y1 = (b.y + b.h).max(y + 1);
    *b = Rect::new(x0, y0, x1 - x0, y1 - y0);
}

/// Drops components whose area is below `fraction` of the mean component area.
pub fn prune_small(components: &[Component], fraction: f64) -> Vec<Component> {
    if components.is_empty() {
        return Vec::new();
    }
    let n = components.len() as f64;
    let total: f64 = components.iter().map(|c| c.area as f64).sum();
    // area >= fraction * total / n, compared without the division.
    let bar = fraction * total;
    let slack = bar * 1e-12;
    components
        .iter()
        .filter(|c| c.area as f64 * n >= bar - slack)
        .cloned()
        .collect()
}

pub fn prune_low_edge_density(components: &[Component], min_density: f64) -> Vec<Component> {
    components
        .iter()
        .filter(|c| c.edge_density >= min_density)
        .cloned()
        .collect()
}
