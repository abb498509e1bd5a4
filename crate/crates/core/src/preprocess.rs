//! Median filtering for impulse-noise removal.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

/// Square median window. Out-of-bounds samples replicate the nearest edge pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MedianConfig {
    pub window: usize,
}

impl Default for MedianConfig {
    fn default() -> Self {
        Self { window: 3 }
    }
}

impl MedianConfig {
    pub fn new(window: usize) -> Result<Self> {
        let cfg = Self { window };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::config(format!(
                "median window must be odd and at least 1, got {}",
                self.window
            )));
        }
        Ok(())
    }
}

pub fn median_filter(img: &GrayImage, cfg: &MedianConfig) -> Result<GrayImage> {
    cfg.validate()?;
    if cfg.window == 1 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let r = (cfg.window / 2) as isize;
    let mid = cfg.window * cfg.window / 2;

    let mut out = vec![0u8; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        // Column histograms of the current window make each step O(window) instead of a sort.
        let mut hist = [0u32; 256];
        let y = y as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                hist[img.get_clamped(dx, y + dy) as usize] += 1;
            }
        }
        row[0] = nth_from_histogram(&hist, mid);
        for x in 1..w as isize {
            for dy in -r..=r {
                hist[img.get_clamped(x - 1 - r, y + dy) as usize] -= 1;
                hist[img.get_clamped(x + r, y + dy) as usize] += 1;
            }
            row[x as usize] = nth_from_histogram(&hist, mid);
        }
    });
    GrayImage::new(w, h, out)
}

fn nth_from_histogram(hist: &[u32; 256], n: usize) -> u8 {
    let mut seen = 0usize;
    for (v, &c) in hist.iter().enumerate() {
        seen += c as usize;
        if seen > n {
            return v as u8;
        }
    }
    unreachable!("histogram holds fewer than {} samples", n + 1)
}
