//! Raster types the attack operates on.
//!
//! An [`Image`] and a [`ColorField`] are dense `H x W x 3` rasters of `f64`
//! values in `[0, 1]`, stored row-major with interleaved channels. A [`Mask`]
//! selects which pixels a [`Pattern`] overwrites; its coordinate view is a
//! [`PixelSet`], and the number of selected pixels is the pattern's l0 cost.

mod io;

pub use io::{load_image, load_mask, save_color_field, save_image, save_mask};

use std::collections::HashSet;

use crate::error::{AscError, Result};

pub const CHANNELS: usize = 3;

fn check_unit_interval(data: &[f64]) -> Result<()> {
    if let Some((i, v)) = data
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
    {
        return Err(AscError::invalid(format!(
            "raster value {v} at flat index {i} is outside [0, 1]"
        )));
    }
    Ok(())
}

fn check_dims(height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(AscError::invalid(format!(
            "raster dimensions must be positive, got {height}x{width}"
        )));
    }
    if len != height * width * CHANNELS {
        return Err(AscError::shape(
            format!(
                "{} values for {height}x{width}x3",
                height * width * CHANNELS
            ),
            format!("{len} values"),
        ));
    }
    Ok(())
}

/// An RGB image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        check_unit_interval(&data)?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width * CHANNELS])
    }

    /// Builds a grayscale image by replicating each value on all channels.
    pub fn from_gray(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(AscError::invalid("ragged grayscale rows"));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.iter().flat_map(|&v| [v; CHANNELS]))
            .collect();
        Self::new(height, width, data)
    }

    pub(crate) fn from_raw_unchecked(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * CHANNELS);
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; CHANNELS] {
        let i = (row * self.width + col) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Replacement colors of a pattern. Defined at every pixel; only the entries
/// under a mask's 1-pixels ever reach the composite.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ColorField {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(height, width, data.len())?;
        check_unit_interval(&data)?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width * CHANNELS])
    }

    pub fn from_image(img: &Image) -> Self {
        Self {
            height: img.height,
            width: img.width,
            data: img.data.clone(),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; CHANNELS] {
        let i = (row * self.width + col) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Returns a copy with pixel `(row, col)` set to `rgb`, clipped to `[0, 1]`.
    pub fn with_pixel(mut self, row: usize, col: usize, rgb: [f64; CHANNELS]) -> Self {
        let i = (row * self.width + col) * CHANNELS;
        for (c, v) in rgb.into_iter().enumerate() {
            self.data[i + c] = v.clamp(0.0, 1.0);
        }
        self
    }

    /// One clipped ascent step `T <- clip(T + step * grad)` applied to the
    /// pixels selected by `mask`. Entries outside the mask are left alone.
    pub fn ascend(&self, mask: &Mask, grad: &[f64], step: f64) -> Result<Self> {
        if mask.dims() != self.dims() {
            return Err(AscError::shape(
                format!("{}x{} mask", self.height, self.width),
                format!("{}x{} mask", mask.height(), mask.width()),
            ));
        }
        if grad.len() != self.data.len() {
            return Err(AscError::shape(
                format!("{} gradient entries", self.data.len()),
                format!("{} gradient entries", grad.len()),
            ));
        }
        let mut data = self.data.clone();
        for (r, c) in mask.ones() {
            let i = (r * self.width + c) * CHANNELS;
            for k in i..i + CHANNELS {
                data[k] = (data[k] + step * grad[k]).clamp(0.0, 1.0);
            }
        }
        Ok(Self {
            height: self.height,
            width: self.width,
            data,
        })
    }
}

/// Binary selection matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl Mask {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![1; height * width],
        }
    }

    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(AscError::shape(
                format!("{} mask entries", height * width),
                format!("{} entries", data.len()),
            ));
        }
        if let Some(v) = data.iter().find(|v| **v > 1) {
            return Err(AscError::invalid(format!("mask value {v} is not 0 or 1")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(u8::from(f(r, c)));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col] == 1
    }

    /// Signed lookup; anything off the canvas reads as unselected.
    pub fn get_signed(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.get(row as usize, col as usize)
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, on: bool) {
        self.data[row * self.width + col] = u8::from(on);
    }

    pub fn count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Row-major iterator over selected coordinates.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == 1)
            .map(move |(i, _)| (i / w, i % w))
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.same_dims(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a | b)
            .collect();
        Ok(Mask {
            height: self.height,
            width: self.width,
            data,
        })
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.dims() == other.dims()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| *a == 0 || *b == 1)
    }

    fn same_dims(&self, other: &Mask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(AscError::shape(
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", other.height, other.width),
            ));
        }
        Ok(())
    }
}

/// Ordered, duplicate-free coordinate view of a mask.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PixelSet {
    coords: Vec<(usize, usize)>,
}

impl PixelSet {
    pub fn new(coords: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(coords.len());
        for &rc in &coords {
            if !seen.insert(rc) {
                return Err(AscError::invalid(format!(
                    "duplicate coordinate ({}, {}) in pixel set",
                    rc.0, rc.1
                )));
            }
        }
        Ok(Self { coords })
    }

    pub(crate) fn from_unique(coords: Vec<(usize, usize)>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn contains(&self, rc: (usize, usize)) -> bool {
        self.coords.contains(&rc)
    }
}

/// A pattern `P = (M, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    mask: Mask,
    colors: ColorField,
}

impl Pattern {
    pub fn new(mask: Mask, colors: ColorField) -> Result<Self> {
        if mask.dims() != colors.dims() {
            return Err(AscError::shape(
                format!("{}x{} colors", mask.height(), mask.width()),
                format!("{}x{} colors", colors.height(), colors.width()),
            ));
        }
        Ok(Self { mask, colors })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn colors(&self) -> &ColorField {
        &self.colors
    }

    pub fn into_parts(self) -> (Mask, ColorField) {
        (self.mask, self.colors)
    }
}

/// `x ⊕ P = (1 - M) * x + M * T`, evaluated as a per-pixel select so that
/// unmasked pixels are copied bit-exactly.
pub fn apply_pattern(x: &Image, p: &Pattern) -> Result<Image> {
    if x.dims() != p.mask.dims() {
        return Err(AscError::shape(
            format!("{}x{} pattern", x.height, x.width),
            format!("{}x{} pattern", p.mask.height(), p.mask.width()),
        ));
    }
    let mut data = x.data.clone();
    for (r, c) in p.mask.ones() {
        let i = (r * x.width + c) * CHANNELS;
        data[i..i + CHANNELS].copy_from_slice(&p.colors.data[i..i + CHANNELS]);
    }
    Ok(Image::from_raw_unchecked(x.height, x.width, data))
}

pub fn l0_norm(m: &Mask) -> usize {
    m.count()
}

pub fn pixel_set(m: &Mask) -> PixelSet {
    PixelSet::from_unique(m.ones().collect())
}

pub fn mask_of(ps: &PixelSet, height: usize, width: usize) -> Result<Mask> {
    let mut m = Mask::zeros(height, width);
    for &(row, col) in ps.coords() {
        if row >= height || col >= width {
            return Err(AscError::OutOfRange {
                row,
                col,
                height,
                width,
            });
        }
        m.set(row, col, true);
    }
    Ok(m)
}

/// Visual panel of an attack: `x`, `M` (white), `T` on `M`, and `x ⊕ P`,
/// left to right with `gap` white columns between them.
pub fn render_panel(x: &Image, p: &Pattern, gap: usize) -> Result<Image> {
    let adv = apply_pattern(x, p)?;
    let (h, w) = x.dims();
    let stride = w + gap;
    let total = 4 * w + 3 * gap;
    let mut data = vec![1.0; h * total * CHANNELS];
    for r in 0..h {
        for c in 0..w {
            let on = p.mask.get(r, c);
            let panels = [
                x.pixel(r, c),
                [if on { 1.0 } else { 0.0 }; CHANNELS],
                if on {
                    p.colors.pixel(r, c)
                } else {
                    [0.0; CHANNELS]
                },
                adv.pixel(r, c),
            ];
            for (k, rgb) in panels.iter().enumerate() {
                let i = (r * total + k * stride + c) * CHANNELS;
                data[i..i + CHANNELS].copy_from_slice(rgb);
            }
        }
    }
    Image::new(h, total, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn panel_layout() {
        let x = Image::filled(2, 3, 0.25).unwrap();
        let mask = Mask::from_fn(2, 3, |r, c| (r, c) == (1, 2));
        let colors = ColorField::filled(2, 3, 0.75).unwrap();
        let panel = render_panel(&x, &Pattern::new(mask, colors).unwrap(), 1).unwrap();
        assert_eq!(panel.dims(), (2, 15));
        assert_eq!(panel.pixel(1, 2), [0.25; 3]);
        assert_eq!(panel.pixel(0, 3), [1.0; 3]);
        assert_eq!(panel.pixel(1, 6), [1.0; 3]);
        assert_eq!(panel.pixel(0, 6), [0.0; 3]);
        assert_eq!(panel.pixel(1, 10), [0.75; 3]);
        assert_eq!(panel.pixel(1, 14), [0.75; 3]);
        assert_eq!(panel.pixel(0, 14), [0.25; 3]);
    }

    fn ramp(h: usize, w: usize) -> Image {
        let n = h * w * CHANNELS;
        Image::new(h, w, (0..n).map(|i| i as f64 / n as f64).collect()).unwrap()
    }

    #[test]
    fn zero_mask_is_identity() {
        let x = ramp(5, 7);
        let p = Pattern::new(Mask::zeros(5, 7), ColorField::filled(5, 7, 0.3).unwrap()).unwrap();
        assert_eq!(apply_pattern(&x, &p).unwrap(), x);
    }

    #[test]
    fn full_mask_replaces_everything() {
        let x = ramp(4, 4);
        let t = ColorField::filled(4, 4, 0.77).unwrap();
        let out = apply_pattern(&x, &Pattern::new(Mask::full(4, 4), t.clone()).unwrap()).unwrap();
        assert_eq!(out.data(), t.data());
    }

    #[test]
    fn hand_worked_two_by_two() {
        let x = Image::from_gray(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let m = Mask::new(2, 2, vec![1, 0, 0, 0]).unwrap();
        let p = Pattern::new(m, ColorField::filled(2, 2, 0.9).unwrap()).unwrap();
        let out = apply_pattern(&x, &p).unwrap();
        let expected = Image::from_gray(&[vec![0.9, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = ramp(3, 3);
        let p = Pattern::new(Mask::zeros(3, 4), ColorField::filled(3, 4, 0.0).unwrap()).unwrap();
        assert!(matches!(apply_pattern(&x, &p), Err(AscError::Shape { .. })));
        assert!(Pattern::new(Mask::zeros(3, 3), ColorField::filled(3, 4, 0.0).unwrap()).is_err());
    }

    #[test]
    fn image_rejects_out_of_range_values() {
        assert!(Image::new(1, 1, vec![0.0, 1.2, 0.0]).is_err());
        assert!(Image::new(1, 1, vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(Image::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn l0_examples() {
        assert_eq!(l0_norm(&Mask::zeros(8, 8)), 0);
        assert_eq!(l0_norm(&Mask::full(8, 8)), 64);
        let diag = Mask::from_fn(5, 5, |r, c| r == c);
        let enumerated = (0..5)
            .flat_map(|r| (0..5).map(move |c| (r, c)))
            .filter(|(r, c)| r == c)
            .count();
        assert_eq!(l0_norm(&diag), enumerated);
        assert_eq!(l0_norm(&diag), 5);
    }

    #[test]
    fn pixel_set_edges() {
        assert_eq!(
            mask_of(&PixelSet::default(), 3, 3).unwrap(),
            Mask::zeros(3, 3)
        );
        let one = mask_of(&PixelSet::new(vec![(0, 0)]).unwrap(), 1, 1).unwrap();
        assert_eq!(one, Mask::full(1, 1));
        assert!(matches!(
            mask_of(&PixelSet::new(vec![(2, 0)]).unwrap(), 2, 2),
            Err(AscError::OutOfRange { .. })
        ));
        assert!(PixelSet::new(vec![(1, 1), (1, 1)]).is_err());
    }

    #[test]
    fn ascend_clips_and_respects_mask() {
        let t = ColorField::filled(2, 2, 0.5).unwrap();
        let m = Mask::new(2, 2, vec![1, 0, 0, 1]).unwrap();
        let grad = vec![
            10.0, -10.0, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -0.2, 0.0, 0.2,
        ];
        let out = t.ascend(&m, &grad, 0.5).unwrap();
        assert_eq!(&out.data()[0..3], &[1.0, 0.0, 0.55]);
        assert_eq!(&out.data()[3..9], &[0.5; 6]);
        assert_eq!(&out.data()[9..12], &[0.4, 0.5, 0.6]);
    }

    fn arb_case() -> impl Strategy<Value = (Image, Mask, ColorField)> {
        (1usize..10, 1usize..10).prop_flat_map(|(h, w)| {
            let n = h * w;
            (
                proptest::collection::vec(0.0f64..=1.0, n * CHANNELS),
                proptest::collection::vec(0u8..=1, n),
                proptest::collection::vec(0.0f64..=1.0, n * CHANNELS),
            )
                .prop_map(move |(x, m, t)| {
                    (
                        Image::new(h, w, x).unwrap(),
                        Mask::new(h, w, m).unwrap(),
                        ColorField::new(h, w, t).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn composite_keeps_unmasked_pixels_and_is_idempotent((x, m, t) in arb_case()) {
            let p = Pattern::new(m.clone(), t.clone()).unwrap();
            let once = apply_pattern(&x, &p).unwrap();
            for r in 0..x.height() {
                for c in 0..x.width() {
                    let expect = if m.get(r, c) { t.pixel(r, c) } else { x.pixel(r, c) };
                    prop_assert_eq!(once.pixel(r, c), expect);
                }
            }
            prop_assert_eq!(apply_pattern(&once, &p).unwrap(), once);
            let direct: usize = m.data().iter().map(|&v| v as usize).sum();
            prop_assert_eq!(l0_norm(&m), direct);
        }

        #[test]
        fn pixel_set_round_trip(bits in proptest::collection::vec(0u8..=1, 256)) {
            let m = Mask::new(16, 16, bits).unwrap();
            let ps = pixel_set(&m);
            prop_assert_eq!(ps.len(), l0_norm(&m));
            let back = mask_of(&ps, 16, 16).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(pixel_set(&back), ps);
        }
    }
}
