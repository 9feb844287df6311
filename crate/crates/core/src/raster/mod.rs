//! Image and mask primitives plus the deterministic pre/postprocessing
//! applied around external models.

mod io;
mod label;
mod morph;

pub use io::{
    read_gray, read_label_map, read_mask, read_rgb, write_atomic, write_gray, write_label_map,
    write_mask, write_rgb,
};
pub use label::{connected_components, Connectivity};
pub use morph::{binary_closing, dilate, erode, fill_holes, StructuringElement};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 8-bit single channel image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGray {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
    pub microns_per_pixel: Option<f64>,
}

impl ImageGray {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_raster(width, height, data.len(), 1)?;
        Ok(Self { width, height, data, microns_per_pixel: None })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self { width, height, data: vec![value; width * height], microns_per_pixel: None }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data, microns_per_pixel: None }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Replicates the intensity into all three channels.
    pub fn to_rgb(&self) -> ImageRgb {
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        ImageRgb { width: self.width, height: self.height, data }
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<ImageGray> {
        check_crop(self.dims(), x0, y0, w, h)?;
        Ok(ImageGray::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }
}

/// 8-bit RGB image, row-major interleaved triples.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_raster(width, height, data.len(), 3)?;
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(3 * width * height);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Unweighted channel mean, rounded down.
    pub fn to_gray(&self) -> ImageGray {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| ((p[0] as u16 + p[1] as u16 + p[2] as u16) / 3) as u8)
            .collect();
        ImageGray { width: self.width, height: self.height, data, microns_per_pixel: None }
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<ImageRgb> {
        check_crop(self.dims(), x0, y0, w, h)?;
        Ok(ImageRgb::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }
}

/// Either kind of input image a segmenter may receive.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyImage {
    Gray(ImageGray),
    Rgb(ImageRgb),
}

impl AnyImage {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            AnyImage::Gray(g) => g.dims(),
            AnyImage::Rgb(c) => c.dims(),
        }
    }

    pub fn to_gray(&self) -> ImageGray {
        match self {
            AnyImage::Gray(g) => g.clone(),
            AnyImage::Rgb(c) => c.to_gray(),
        }
    }
}

/// Pixel-membership mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

/// Region excluded from scoring. Same layout as [`BinaryMask`].
pub type DontCareMask = BinaryMask;

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_raster(width, height, bits.len(), 1)?;
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![true; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// True when every foreground pixel of `other` is also set here.
    pub fn contains(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a || !b)
    }

    /// Tight inclusive bounding box of the foreground.
    pub fn bounding_box(&self) -> Option<BBox> {
        let mut bb: Option<BBox> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    let b = bb.get_or_insert(BBox { x_min: x, y_min: y, x_max: x, y_max: y });
                    b.x_min = b.x_min.min(x);
                    b.x_max = b.x_max.max(x);
                    b.y_min = b.y_min.min(y);
                    b.y_max = b.y_max.max(y);
                }
            }
        }
        bb
    }

    pub(crate) fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::dims(self.dims(), other));
        }
        Ok(())
    }
}

/// Instance-labelled raster; 0 is background. Ids need not be contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_raster(width, height, labels.len(), 1)?;
        Ok(Self { width, height, labels })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, labels: vec![0; width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Sorted distinct nonzero ids.
    pub fn instance_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.labels.iter().copied().filter(|&l| l != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Union of all instances.
    pub fn binarize(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l != 0).collect(),
        }
    }

    /// Pixel set of a single instance.
    pub fn instance_mask(&self, id: u32) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l == id && id != 0).collect(),
        }
    }
}

/// Inclusive pixel-coordinate box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min + 1
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        self.x_min <= other.x_min
            && self.y_min <= other.y_min
            && self.x_max >= other.x_max
            && self.y_max >= other.y_max
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    pub fn fits_in(&self, width: usize, height: usize) -> bool {
        self.x_min <= self.x_max && self.y_min <= self.y_max && self.x_max < width && self.y_max < height
    }
}

/// Bounding-box prompt derived from a ground-truth mask.
///
/// The tight box is grown vertically by `ceil((factor - 1) * h / 2)` on each
/// side, then clamped to the image. The horizontal extent is untouched.
pub fn bbox_prompt(gt: &BinaryMask, height_factor: f64) -> Result<BBox> {
    if !(height_factor >= 1.0) || !height_factor.is_finite() {
        return Err(Error::InvalidInput(format!("height factor {height_factor} must be >= 1")));
    }
    let tight = gt.bounding_box().ok_or(Error::EmptyMask)?;
    let h = tight.height() as f64;
    // Guard against (1.1 - 1.0) * 20 / 2 = 1.0000000000000009 rounding up to 2.
    let grow = ((height_factor - 1.0) * h / 2.0 - 1e-9).ceil().max(0.0) as usize;
    Ok(BBox {
        x_min: tight.x_min,
        x_max: tight.x_max,
        y_min: tight.y_min.saturating_sub(grow),
        y_max: (tight.y_max + grow).min(gt.height - 1),
    })
}

/// Maps every intensity `v` to `255 - v`.
pub fn invert_grayscale(img: &ImageGray) -> ImageGray {
    ImageGray { data: img.data.iter().map(|&v| 255 - v).collect(), ..img.clone() }
}

/// Zeroes every pixel flagged in `low_signal`.
pub fn apply_signal_mask(img: &ImageGray, low_signal: &BinaryMask) -> Result<ImageGray> {
    low_signal.ensure_same_dims(img.dims())?;
    let data = img
        .data
        .iter()
        .zip(&low_signal.bits)
        .map(|(&v, &masked)| if masked { 0 } else { v })
        .collect();
    Ok(ImageGray { data, ..img.clone() })
}

fn check_raster(width: usize, height: usize, len: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidGeometry(format!("raster must be at least 1x1, got {width}x{height}")));
    }
    if len != width * height * channels {
        return Err(Error::DimensionMismatch {
            expected: format!("{} samples", width * height * channels),
            found: format!("{len} samples"),
        });
    }
    Ok(())
}

fn check_crop(dims: (usize, usize), x0: usize, y0: usize, w: usize, h: usize) -> Result<()> {
    if w == 0 || h == 0 || x0 + w > dims.0 || y0 + h > dims.1 {
        return Err(Error::InvalidGeometry(format!(
            "crop {w}x{h}+{x0}+{y0} outside {}x{} image",
            dims.0, dims.1
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: usize, h: usize, rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| rows.contains(&y) && cols.contains(&x))
    }

    #[test]
    fn bbox_prompt_expands_height_symmetrically() {
        let gt = rect(300, 400, 100..=199, 50..=149);
        let b = bbox_prompt(&gt, 1.15).unwrap();
        assert_eq!(b, BBox { x_min: 50, x_max: 149, y_min: 92, y_max: 207 });
    }

    #[test]
    fn bbox_prompt_unit_factor_is_tight() {
        let gt = rect(300, 400, 100..=199, 50..=149);
        let b = bbox_prompt(&gt, 1.0).unwrap();
        assert_eq!(b, BBox { x_min: 50, x_max: 149, y_min: 100, y_max: 199 });
    }

    #[test]
    fn bbox_prompt_clamps_at_top() {
        let gt = rect(64, 64, 0..=9, 3..=20);
        let b = bbox_prompt(&gt, 2.0).unwrap();
        assert_eq!((b.y_min, b.y_max), (0, 14));
        assert_eq!((b.x_min, b.x_max), (3, 20));
    }

    #[test]
    fn bbox_prompt_clamps_at_bottom() {
        let gt = rect(10, 20, 15..=19, 0..=9);
        let b = bbox_prompt(&gt, 3.0).unwrap();
        assert_eq!((b.y_min, b.y_max), (10, 19));
    }

    #[test]
    fn bbox_prompt_rejects_empty_and_small_factor() {
        assert!(matches!(bbox_prompt(&BinaryMask::empty(4, 4), 1.15), Err(Error::EmptyMask)));
        let gt = rect(4, 4, 1..=2, 1..=2);
        assert!(matches!(bbox_prompt(&gt, 0.9), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn invert_examples() {
        let zero = ImageGray::filled(3, 2, 0);
        assert!(invert_grayscale(&zero).data.iter().all(|&v| v == 255));
        let img = ImageGray::filled(1, 1, 100);
        assert_eq!(invert_grayscale(&img).data, vec![155]);
        let ramp = ImageGray::from_fn(16, 16, |x, y| (x * 16 + y) as u8);
        assert_eq!(invert_grayscale(&invert_grayscale(&ramp)), ramp);
    }

    #[test]
    fn signal_mask_cases() {
        let img = ImageGray::from_fn(4, 3, |x, y| (10 + x + y) as u8);
        assert_eq!(apply_signal_mask(&img, &BinaryMask::empty(4, 3)).unwrap(), img);
        let all = apply_signal_mask(&img, &BinaryMask::full(4, 3)).unwrap();
        assert!(all.data.iter().all(|&v| v == 0));
        let mut one = BinaryMask::empty(4, 3);
        one.set(2, 1, true);
        let out = apply_signal_mask(&img, &one).unwrap();
        for y in 0..3 {
            for x in 0..4 {
                let want = if (x, y) == (2, 1) { 0 } else { img.get(x, y) };
                assert_eq!(out.get(x, y), want);
            }
        }
        assert!(matches!(
            apply_signal_mask(&img, &BinaryMask::empty(3, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn raster_constructors_validate_length() {
        assert!(ImageGray::new(2, 2, vec![0; 3]).is_err());
        assert!(ImageRgb::new(2, 2, vec![0; 12]).is_ok());
        assert!(BinaryMask::new(0, 2, vec![]).is_err());
    }
}
