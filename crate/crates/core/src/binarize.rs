//! Global Otsu binarization.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    pub counts: [u64; 256],
}

impl Default for Histogram256 {
    fn default() -> Self {
        Self { counts: [0; 256] }
    }
}

impl Histogram256 {
    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    /// Adds another histogram's counts into this one.
    pub fn merge(&mut self, other: &Histogram256) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
    }
}

pub fn histogram(img: &GrayImage) -> Histogram256 {
    let mut h = Histogram256::default();
    for &v in img.data() {
        h.counts[v as usize] += 1;
    }
    h
}

/// Otsu's threshold: the `t` maximizing between-class variance, class 0 being `v <= t`.
///
/// Candidates start at the lowest occupied intensity, so class 0 is never
/// empty; a threshold with an empty class 1 scores zero. Ties go to the
/// smallest `t`, which makes a single-valued histogram return that value.
pub fn otsu_threshold(h: &Histogram256) -> Result<u8> {
    if h.total() == 0 {
        return Err(Error::EmptyHistogram);
    }
    Ok(otsu_u128(h).unwrap_or_else(|| otsu_big(h)))
}

/// Class sums for the candidate range. Returns `None` if a sum overflows.
fn class_sums(h: &Histogram256) -> Option<(u128, u128)> {
    let mut n = 0u128;
    let mut s = 0u128;
    for (v, &c) in h.counts.iter().enumerate() {
        n = n.checked_add(c as u128)?;
        s = s.checked_add((c as u128).checked_mul(v as u128)?)?;
    }
    Some((n, s))
}

fn first_occupied(h: &Histogram256) -> usize {
    h.counts
        .iter()
        .position(|&c| c > 0)
        .expect("non-empty histogram")
}

// Between-class variance up to the constant factor 1/n²: (s0·w1 − s1·w0)² / (w0·w1).
fn otsu_u128(h: &Histogram256) -> Option<u8> {
    let (n, s) = class_sums(h)?;
    let start = first_occupied(h);
    let mut best_t = start;
    let (mut best_num, mut best_den) = (0u128, 1u128);
    let (mut w0, mut s0) = (0u128, 0u128);
    for (v, &c) in h.counts.iter().enumerate().take(start) {
        w0 += c as u128;
        s0 += c as u128 * v as u128;
    }
    for t in start..256 {
        w0 += h.counts[t] as u128;
        s0 += h.counts[t] as u128 * t as u128;
        let w1 = n - w0;
        if w1 == 0 {
            continue;
        }
        let s1 = s - s0;
        let a = s0.checked_mul(w1)?;
        let b = s1.checked_mul(w0)?;
        let diff = a.abs_diff(b);
        let num = diff.checked_mul(diff)?;
        let den = w0.checked_mul(w1)?;
        if num.checked_mul(best_den)? > best_num.checked_mul(den)? {
            best_t = t;
            best_num = num;
            best_den = den;
        }
    }
    Some(best_t as u8)
}

fn otsu_big(h: &Histogram256) -> u8 {
    let n: BigUint = h.counts.iter().map(|&c| BigUint::from(c)).sum();
    let s: BigUint = h
        .counts
        .iter()
        .enumerate()
        .map(|(v, &c)| BigUint::from(c) * BigUint::from(v))
        .sum();
    let start = first_occupied(h);
    let mut best_t = start;
    let (mut best_num, mut best_den) = (BigUint::from(0u8), BigUint::from(1u8));
    let (mut w0, mut s0) = (BigUint::from(0u8), BigUint::from(0u8));
    for (v, &c) in h.counts.iter().enumerate().take(start) {
        w0 += c;
        s0 += BigUint::from(c) * BigUint::from(v);
    }
    for t in start..256 {
        w0 += h.counts[t];
        s0 += BigUint::from(h.counts[t]) * BigUint::from(t);
        if w0 == n {
            continue;
        }
        let w1 = &n - &w0;
        let s1 = &s - &s0;
        let a = &s0 * &w1;
        let b = &s1 * &w0;
        let diff = if a >= b { a - b } else { b - a };
        let num = &diff * &diff;
        let den = &w0 * &w1;
        if &num * &best_den > &best_num * &den {
            best_t = t;
            best_num = num;
            best_den = den;
        }
    }
    best_t as u8
}

/// Foreground/background mask, row-major; `true` marks foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} mask needs {} cells, got {}",
                width * height,
                mask.len()
            )));
        }
        Ok(Self {
            width,
            height,
            mask,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                mask.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            mask,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub(crate) fn mask_mut(&mut self) -> &mut [bool] {
        &mut self.mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.mask[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// True if every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    /// 0/255 rendering for inspection.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::new(
            self.width,
            self.height,
            self.mask.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        )
        .expect("mask has positive dimensions")
    }
}

/// Foreground where `img > t`.
pub fn apply_threshold(img: &GrayImage, t: u8) -> BinaryImage {
    BinaryImage {
        width: img.width(),
        height: img.height(),
        mask: img.data().iter().map(|&v| v > t).collect(),
    }
}
