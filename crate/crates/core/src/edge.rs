//! Sobel gradients and edge emphasis.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

/// Row-major plane of per-pixel values sharing an image's dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} plane needs {} values, got {}",
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

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
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

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    pub fn same_shape<U>(&self, other: &Plane<U>) -> bool {
        self.width == other.width && self.height == other.height
    }
}

pub type SignedPlane = Plane<i32>;
pub type MagnitudePlane = Plane<u32>;

/// 3×3 integer kernel, `coefficients[row][col]`; the centre is `[1][1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel3x3 {
    pub coefficients: [[i32; 3]; 3],
}

impl Kernel3x3 {
    pub const fn new(coefficients: [[i32; 3]; 3]) -> Self {
        Self { coefficients }
    }

    /// Horizontal derivative: responds to vertical edges.
    pub const SOBEL_X: Kernel3x3 = Kernel3x3::new([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]);
    /// Vertical derivative: responds to horizontal edges.
    pub const SOBEL_Y: Kernel3x3 = Kernel3x3::new([[-1, -2, -1], [0, 0, 0], [1, 2, 1]]);

    pub fn transpose(&self) -> Self {
        let c = &self.coefficients;
        let mut t = [[0; 3]; 3];
        for (r, row) in t.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = c[k][r];
            }
        }
        Self::new(t)
    }
}

/// Correlates `img` with `k` over a replicated border, in exact integer arithmetic.
///
/// `k.coefficients[2][2]` weights the pixel down and to the right of the centre.
pub fn convolve3x3(img: &GrayImage, k: &Kernel3x3) -> SignedPlane {
    let (w, h) = (img.width(), img.height());
    let c = k.coefficients;
    let mut out = vec![0i32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let rows = [y.saturating_sub(1), y, (y + 1).min(h - 1)];
        let src: [&[u8]; 3] = rows.map(|yy| &img.data()[yy * w..(yy + 1) * w]);
        for (x, slot) in row.iter_mut().enumerate() {
            let cols = [x.saturating_sub(1), x, (x + 1).min(w - 1)];
            let mut acc = 0i32;
            for (kr, line) in src.iter().enumerate() {
                for (kc, &xx) in cols.iter().enumerate() {
                    acc += c[kr][kc] * line[xx] as i32;
                }
            }
            *slot = acc;
        }
    });
    Plane {
        width: w,
        height: h,
        data: out,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MagnitudeMode {
    /// `sqrt(gx² + gy²)`, rounded half-up.
    Exact,
    /// `|gx| + |gy|`.
    #[default]
    Approx,
}

impl FromStr for MagnitudeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(MagnitudeMode::Exact),
            "approx" => Ok(MagnitudeMode::Approx),
            other => Err(Error::config(format!(
                "magnitude mode must be exact or approx, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for MagnitudeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MagnitudeMode::Exact => "exact",
            MagnitudeMode::Approx => "approx",
        })
    }
}

#[inline]
pub fn magnitude_at(gx: i32, gy: i32, mode: MagnitudeMode) -> u32 {
    match mode {
        MagnitudeMode::Approx => gx.unsigned_abs() + gy.unsigned_abs(),
        MagnitudeMode::Exact => {
            let sq = (gx as f64).mul_add(gx as f64, (gy as f64) * (gy as f64));
            (sq.sqrt() + 0.5).floor() as u32
        }
    }
}

pub fn gradient_magnitude(
    gx: &SignedPlane,
    gy: &SignedPlane,
    mode: MagnitudeMode,
) -> Result<MagnitudePlane> {
    if !gx.same_shape(gy) {
        return Err(Error::DimensionMismatch(format!(
            "gx is {}x{}, gy is {}x{}",
            gx.width, gx.height, gy.width, gy.height
        )));
    }
    let data = gx
        .data
        .iter()
        .zip(&gy.data)
        .map(|(&a, &b)| magnitude_at(a, b, mode))
        .collect();
    Ok(Plane {
        width: gx.width,
        height: gx.height,
        data,
    })
}

/// Horizontal and vertical Sobel responses with their combined magnitude.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradientMap {
    pub gx: SignedPlane,
    pub gy: SignedPlane,
    pub magnitude: MagnitudePlane,
}

impl GradientMap {
    pub fn width(&self) -> usize {
        self.gx.width
    }

    pub fn height(&self) -> usize {
        self.gx.height
    }
}

pub fn sobel_gradients(img: &GrayImage, mode: MagnitudeMode) -> GradientMap {
    let gx = convolve3x3(img, &Kernel3x3::SOBEL_X);
    let gy = convolve3x3(img, &Kernel3x3::SOBEL_Y);
    let magnitude = gradient_magnitude(&gx, &gy, mode).expect("planes share the image shape");
    GradientMap { gx, gy, magnitude }
}

/// Linearly maps `[0, max]` onto `[0, 255]`, rounding half-up.
pub fn edge_emphasize(mag: &MagnitudePlane) -> GrayImage {
    let max = mag.data.iter().copied().max().unwrap_or(0) as u64;
    let data = if max == 0 {
        vec![0; mag.data.len()]
    } else {
        mag.data
            .iter()
            .map(|&v| ((2 * 255 * v as u64 + max) / (2 * max)) as u8)
            .collect()
    };
    GrayImage::new(mag.width, mag.height, data).expect("magnitude plane has positive dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_correlate(img: &GrayImage, k: &Kernel3x3) -> SignedPlane {
        Plane::from_fn(img.width(), img.height(), |x, y| {
            let mut acc = 0;
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let coeff = k.coefficients[(dy + 1) as usize][(dx + 1) as usize];
                    acc += coeff * img.get_clamped(x as isize + dx, y as isize + dy) as i32;
                }
            }
            acc
        })
    }

    #[test]
    fn zero_kernel_gives_zero_plane() {
        let img = GrayImage::from_fn(4, 3, |x, y| (x * 31 + y * 7) as u8);
        let out = convolve3x3(&img, &Kernel3x3::new([[0; 3]; 3]));
        assert!(out.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn constant_image_has_no_gradient() {
        let img = GrayImage::filled(5, 5, 93);
        let g = sobel_gradients(&img, MagnitudeMode::Approx);
        assert!(g.gx.data().iter().all(|&v| v == 0));
        assert!(g.gy.data().iter().all(|&v| v == 0));
        assert!(g.magnitude.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn horizontal_ramp() {
        let img = GrayImage::from_fn(5, 5, |x, _| x as u8);
        let gx = convolve3x3(&img, &Kernel3x3::SOBEL_X);
        let reference = naive_correlate(&img, &Kernel3x3::SOBEL_X);
        assert_eq!(gx, reference);
        for y in 1..4 {
            for x in 1..4 {
                assert_eq!(gx.get(x, y), 8);
            }
        }
    }

    #[test]
    fn vertical_step() {
        let img = GrayImage::from_fn(6, 5, |x, _| if x <= 2 { 0 } else { 100 });
        let g = sobel_gradients(&img, MagnitudeMode::Approx);
        for y in 1..4 {
            assert_eq!(g.gx.get(2, y), 400);
            assert_eq!(g.gx.get(3, y), 400);
            assert_eq!(g.gy.get(2, y), 0);
            assert_eq!(g.gy.get(3, y), 0);
            assert_eq!(g.gx.get(0, y), 0);
        }
    }

    #[test]
    fn sobel_y_is_transpose_of_sobel_x() {
        assert_eq!(Kernel3x3::SOBEL_X.transpose(), Kernel3x3::SOBEL_Y);
    }

    #[test]
    fn magnitude_modes() {
        assert_eq!(magnitude_at(3, 4, MagnitudeMode::Exact), 5);
        assert_eq!(magnitude_at(3, 4, MagnitudeMode::Approx), 7);
        assert_eq!(magnitude_at(-3, 4, MagnitudeMode::Approx), 7);
        assert_eq!(magnitude_at(0, 0, MagnitudeMode::Exact), 0);
        assert_eq!(magnitude_at(0, 0, MagnitudeMode::Approx), 0);
        // sqrt(2) = 1.414 rounds down, sqrt(5) = 2.236 down, sqrt(8) = 2.83 up
        assert_eq!(magnitude_at(1, 1, MagnitudeMode::Exact), 1);
        assert_eq!(magnitude_at(1, 2, MagnitudeMode::Exact), 2);
        assert_eq!(magnitude_at(2, 2, MagnitudeMode::Exact), 3);
    }

    #[test]
    fn magnitude_shape_mismatch() {
        let a = Plane::new(2, 2, vec![0; 4]).unwrap();
        let b = Plane::new(4, 1, vec![0; 4]).unwrap();
        assert!(gradient_magnitude(&a, &b, MagnitudeMode::Exact).is_err());
    }

    #[test]
    fn emphasis_rescales() {
        let zero = Plane::new(3, 1, vec![0u32; 3]).unwrap();
        assert_eq!(edge_emphasize(&zero).data(), &[0, 0, 0]);
        let ends = Plane::new(2, 1, vec![0u32, 17]).unwrap();
        assert_eq!(edge_emphasize(&ends).data(), &[0, 255]);
        let mid = Plane::new(3, 1, vec![0u32, 5, 10]).unwrap();
        assert_eq!(edge_emphasize(&mid).data(), &[0, 128, 255]);
    }

    fn image(max_side: usize) -> impl Strategy<Value = GrayImage> {
        (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h)
                .prop_map(move |d| GrayImage::new(w, h, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn convolution_matches_naive(img in image(8), coeffs in proptest::array::uniform9(-4i32..=4)) {
            let k = Kernel3x3::new([
                [coeffs[0], coeffs[1], coeffs[2]],
                [coeffs[3], coeffs[4], coeffs[5]],
                [coeffs[6], coeffs[7], coeffs[8]],
            ]);
            prop_assert_eq!(convolve3x3(&img, &k), naive_correlate(&img, &k));
        }

        #[test]
        fn magnitude_inequalities(gx in -2040i32..=2040, gy in -2040i32..=2040) {
            let exact = magnitude_at(gx, gy, MagnitudeMode::Exact);
            let approx = magnitude_at(gx, gy, MagnitudeMode::Approx);
            prop_assert!(approx >= exact);
            prop_assert!(exact >= gx.unsigned_abs().max(gy.unsigned_abs()));
        }

        #[test]
        fn convolution_is_linear(
            pair in (1usize..7, 1usize..7).prop_flat_map(|(w, h)| (
                proptest::collection::vec(0u8..=60, w * h),
                proptest::collection::vec(0u8..=60, w * h),
                Just((w, h)),
            )),
            a in 0i32..=2,
            b in 0i32..=2,
        ) {
            let (d1, d2, (w, h)) = pair;
            let combined: Vec<u8> = d1.iter().zip(&d2).map(|(&p, &q)| (a * p as i32 + b * q as i32) as u8).collect();
            let i1 = GrayImage::new(w, h, d1).unwrap();
            let i2 = GrayImage::new(w, h, d2).unwrap();
            let ic = GrayImage::new(w, h, combined).unwrap();
            for k in [Kernel3x3::SOBEL_X, Kernel3x3::SOBEL_Y] {
                let c1 = convolve3x3(&i1, &k);
                let c2 = convolve3x3(&i2, &k);
                let cc = convolve3x3(&ic, &k);
                for i in 0..w * h {
                    prop_assert_eq!(cc.data()[i], a * c1.data()[i] + b * c2.data()[i]);
                }
            }
        }

        #[test]
        fn emphasis_peak_is_255(values in proptest::collection::vec(0u32..100_000, 1..40)) {
            prop_assume!(values.iter().any(|&v| v > 0));
            let n = values.len();
            let out = edge_emphasize(&Plane::new(n, 1, values).unwrap());
            prop_assert_eq!(out.data().iter().copied().max(), Some(255));
        }
    }

    #[test]
    fn rotation_swaps_gradient_roles() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(6);
        let n = 6;
        let img = GrayImage::from_fn(n, n, |_, _| rng.gen());
        // Rotate 90° clockwise: rotated(x, y) = img(y, n-1-x).
        let rot = GrayImage::from_fn(n, n, |x, y| img.get(y, n - 1 - x));
        let g = sobel_gradients(&img, MagnitudeMode::Approx);
        let gr = sobel_gradients(&rot, MagnitudeMode::Approx);
        for y in 0..n {
            for x in 0..n {
                assert_eq!(gr.gx.get(x, y), -g.gy.get(y, n - 1 - x));
                assert_eq!(gr.gy.get(x, y), g.gx.get(y, n - 1 - x));
                assert_eq!(gr.magnitude.get(x, y), g.magnitude.get(y, n - 1 - x));
            }
        }
    }
}
