//! Binary dilation.

use std::fmt;
use std::str::FromStr;

use crate::binarize::BinaryImage;
use crate::error::{Error, Result};

/// Odd-sized binary structuring element anchored at its centre cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl StructuringElement {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if width.is_multiple_of(2) || height.is_multiple_of(2) {
            return Err(Error::config(format!(
                "structuring element must have odd dimensions, got {width}x{height}"
            )));
        }
        if mask.len() != width * height {
            return Err(Error::config(format!(
                "{width}x{height} structuring element needs {} cells, got {}",
                width * height,
                mask.len()
            )));
        }
        if !mask[(height / 2) * width + width / 2] {
            return Err(Error::config("structuring element origin cell must be set"));
        }
        Ok(Self {
            width,
            height,
            mask,
        })
    }

    /// Full `width × height` rectangle.
    pub fn rect(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn single() -> Self {
        Self {
            width: 1,
            height: 1,
            mask: vec![true],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    /// Offsets of the set cells relative to the origin.
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let (cx, cy) = self.origin();
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| {
                let x = (i % self.width) as isize - cx as isize;
                let y = (i / self.width) as isize - cy as isize;
                (x, y)
            })
    }
}

impl FromStr for StructuringElement {
    type Err = Error;

    /// Parses `WxH` into a full rectangle.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("expected WxH structuring element size, got {s:?}"));
        let (w, h) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let w: usize = w.trim().parse().map_err(|_| bad())?;
        let h: usize = h.trim().parse().map_err(|_| bad())?;
        Self::rect(w, h)
    }
}

impl fmt::Display for StructuringElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// `out(p)` is set iff some set cell of `se`, with its origin placed on `p`,
/// lies over a foreground pixel. Pixels outside the image count as background.
pub fn dilate(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    if se.is_full() {
        dilate_rect(img, se.width / 2, se.height / 2)
    } else {
        dilate_general(img, se)
    }
}

// A full rectangle separates into a horizontal run followed by a vertical run.
fn dilate_rect(img: &BinaryImage, rx: usize, ry: usize) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let src = img.mask();

    let mut rows = vec![false; w * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        let out = &mut rows[y * w..(y + 1) * w];
        let mut last_fg: Option<usize> = None;
        // Forward pass covers foreground at or left of x within rx; backward covers the right.
        for x in 0..w {
            if line[x] {
                last_fg = Some(x);
            }
            out[x] = matches!(last_fg, Some(f) if x - f <= rx);
        }
        let mut next_fg: Option<usize> = None;
        for x in (0..w).rev() {
            if line[x] {
                next_fg = Some(x);
            }
            if matches!(next_fg, Some(f) if f - x <= rx) {
                out[x] = true;
            }
        }
    }

    let mut out = BinaryImage::empty(w, h);
    let dst = out.mask_mut();
    for x in 0..w {
        let mut last_fg: Option<usize> = None;
        for y in 0..h {
            if rows[y * w + x] {
                last_fg = Some(y);
            }
            dst[y * w + x] = matches!(last_fg, Some(f) if y - f <= ry);
        }
        let mut next_fg: Option<usize> = None;
        for y in (0..h).rev() {
            if rows[y * w + x] {
                next_fg = Some(y);
            }
            if matches!(next_fg, Some(f) if f - y <= ry) {
                dst[y * w + x] = true;
            }
        }
    }
    out
}

fn dilate_general(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let src = img.mask();
    let mut out = BinaryImage::empty(img.width(), img.height());
    let dst = out.mask_mut();
    for (dx, dy) in se.offsets() {
        for y in 0..h {
            let sy = y + dy;
            if sy < 0 || sy >= h {
                continue;
            }
            let x_lo = (-dx).max(0);
            let x_hi = (w - dx).min(w);
            for x in x_lo..x_hi {
                if src[(sy * w + x + dx) as usize] {
                    dst[(y * w + x) as usize] = true;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Union of translated copies of the reflected element, one per foreground pixel.
    fn union_of_translates(img: &BinaryImage, se: &StructuringElement) -> BinaryImage {
        let mut out = BinaryImage::empty(img.width(), img.height());
        for y in 0..img.height() as isize {
            for x in 0..img.width() as isize {
                if !img.get(x as usize, y as usize) {
                    continue;
                }
                for (dx, dy) in se.offsets() {
                    let (px, py) = (x - dx, y - dy);
                    if px >= 0
                        && py >= 0
                        && (px as usize) < img.width()
                        && (py as usize) < img.height()
                    {
                        out.set(px as usize, py as usize, true);
                    }
                }
            }
        }
        out
    }

    fn points(w: usize, h: usize, pts: &[(usize, usize)]) -> BinaryImage {
        BinaryImage::from_fn(w, h, |x, y| pts.contains(&(x, y)))
    }

    #[test]
    fn empty_stays_empty() {
        let img = BinaryImage::empty(5, 4);
        assert_eq!(
            dilate(&img, &StructuringElement::rect(3, 3).unwrap()).count(),
            0
        );
    }

    #[test]
    fn single_pixel_grows_into_square() {
        let img = points(5, 5, &[(2, 2)]);
        let out = dilate(&img, &StructuringElement::rect(3, 3).unwrap());
        let expected =
            BinaryImage::from_fn(5, 5, |x, y| (1..=3).contains(&x) && (1..=3).contains(&y));
        assert_eq!(out, expected);
    }

    #[test]
    fn horizontal_bar_bridges_gap() {
        // (row 0, columns 0 and 2) with a 1x3 bar.
        let img = points(5, 3, &[(0, 0), (2, 0)]);
        let se = StructuringElement::rect(3, 1).unwrap();
        let out = dilate(&img, &se);
        assert_eq!(out, union_of_translates(&img, &se));
        let expected = BinaryImage::from_fn(5, 3, |x, y| y == 0 && x <= 3);
        assert_eq!(out, expected);
    }

    #[test]
    fn element_validation() {
        assert!(StructuringElement::rect(2, 3).is_err());
        assert!(StructuringElement::rect(3, 0).is_err());
        assert!(StructuringElement::new(3, 1, vec![true, false, true]).is_err());
        assert!("5x1".parse::<StructuringElement>().is_ok());
        assert!("4x1".parse::<StructuringElement>().is_err());
        assert!("five".parse::<StructuringElement>().is_err());
        assert_eq!("1X5".parse::<StructuringElement>().unwrap().height(), 5);
    }

    fn mask(w: usize, h: usize) -> impl Strategy<Value = BinaryImage> {
        proptest::collection::vec(proptest::bool::weighted(0.2), w * h)
            .prop_map(move |m| BinaryImage::new(w, h, m).unwrap())
    }

    fn element() -> impl Strategy<Value = StructuringElement> {
        (0usize..3, 0usize..3).prop_flat_map(|(hw, hh)| {
            let (w, h) = (2 * hw + 1, 2 * hh + 1);
            proptest::collection::vec(any::<bool>(), w * h).prop_map(move |mut m| {
                m[hh * w + hw] = true;
                StructuringElement::new(w, h, m).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn matches_oracle(img in mask(8, 8), se in element()) {
            prop_assert_eq!(dilate(&img, &se), union_of_translates(&img, &se));
        }

        #[test]
        fn rect_fast_path_matches_oracle(img in mask(9, 7), hw in 0usize..4, hh in 0usize..4) {
            let se = StructuringElement::rect(2 * hw + 1, 2 * hh + 1).unwrap();
            prop_assert_eq!(dilate(&img, &se), union_of_translates(&img, &se));
        }

        #[test]
        fn extensive_and_monotone(a in mask(8, 8), b in mask(8, 8), se in element()) {
            let da = dilate(&a, &se);
            prop_assert!(a.is_subset_of(&da));
            let union = BinaryImage::from_fn(8, 8, |x, y| a.get(x, y) || b.get(x, y));
            prop_assert!(da.is_subset_of(&dilate(&union, &se)));
        }

        #[test]
        fn single_cell_is_identity(img in mask(6, 5)) {
            prop_assert_eq!(dilate(&img, &StructuringElement::single()), img);
        }
    }
}
