//! Slice stacking, separable 3-D Gaussian smoothing and the `VOL1` volume
//! format: magic `VOL1`, `w, h, d: u32 LE`, `slice_spacing_um: f32 LE`,
//! then `w * h * d` `f32 LE` voxels (x fastest, then y, then slice).

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{write_gray, BinaryMask, ImageGray};

const MAGIC: &[u8; 4] = b"VOL1";

#[derive(Debug, Clone, PartialEq)]
pub struct MaskVolume {
    pub width: usize,
    pub height: usize,
    pub depth: usize,
    pub voxels: Vec<f64>,
    pub slice_spacing_um: f64,
}

impl MaskVolume {
    pub fn new(width: usize, height: usize, depth: usize, voxels: Vec<f64>, slice_spacing_um: f64) -> Result<Self> {
        if width == 0 || height == 0 || depth == 0 {
            return Err(Error::InvalidGeometry(format!("volume {width}x{height}x{depth} is empty")));
        }
        if voxels.len() != width * height * depth {
            return Err(Error::DimensionMismatch {
                expected: format!("{} voxels", width * height * depth),
                found: format!("{} voxels", voxels.len()),
            });
        }
        if voxels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("volume contains non-finite voxels".into()));
        }
        Ok(Self { width, height, depth, voxels, slice_spacing_um })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        depth: usize,
        slice_spacing_um: f64,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut voxels = Vec::with_capacity(width * height * depth);
        for z in 0..depth {
            for y in 0..height {
                for x in 0..width {
                    voxels.push(f(x, y, z));
                }
            }
        }
        Self { width, height, depth, voxels, slice_spacing_um }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.voxels[self.index(x, y, z)]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.depth)
    }

    pub fn sum(&self) -> f64 {
        self.voxels.iter().sum()
    }

    /// Slice `z` as a mask of voxels `>= 0.5`.
    pub fn slice_mask(&self, z: usize) -> BinaryMask {
        let plane = self.width * self.height;
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.voxels[z * plane..(z + 1) * plane].iter().map(|&v| v >= 0.5).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 4 * self.voxels.len());
        out.extend_from_slice(MAGIC);
        for dim in [self.width, self.height, self.depth] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.slice_spacing_um as f32).to_le_bytes());
        for v in &self.voxels {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..4] != MAGIC {
            return Err(Error::ProtocolViolation("missing VOL1 header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let (w, h, d) = (word(4) as usize, word(8) as usize, word(12) as usize);
        let spacing = f32::from_le_bytes(bytes[16..20].try_into().unwrap()) as f64;
        let body = &bytes[20..];
        if body.len() != 4 * w * h * d {
            return Err(Error::ProtocolViolation(format!("VOL1 body size does not match {w}x{h}x{d}")));
        }
        let voxels = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        Self::new(w, h, d, voxels, spacing)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::raster::write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// Writes one 8-bit PNG per slice (`value * 255`, rounded) as
    /// `{prefix}_{z:04}.png`. Returns the written paths in slice order.
    pub fn write_png_stack(&self, dir: impl AsRef<Path>, prefix: &str) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let plane = self.width * self.height;
        (0..self.depth)
            .map(|z| {
                let data = self.voxels[z * plane..(z + 1) * plane]
                    .iter()
                    .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                    .collect();
                let path = dir.join(format!("{prefix}_{z:04}.png"));
                write_gray(&path, &ImageGray { width: self.width, height: self.height, data, microns_per_pixel: None })?;
                Ok(path)
            })
            .collect()
    }
}

/// Stacks per-slice masks into a 0/1 volume, preserving order.
pub fn stack_slices(masks: &[BinaryMask], slice_spacing_um: f64) -> Result<MaskVolume> {
    let first = masks.first().ok_or_else(|| Error::InvalidInput("no slices to stack".into()))?;
    let (w, h) = first.dims();
    let mut voxels = Vec::with_capacity(w * h * masks.len());
    for m in masks {
        m.ensure_same_dims((w, h))?;
        voxels.extend(m.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    }
    MaskVolume::new(w, h, masks.len(), voxels, slice_spacing_um)
}

/// Per-axis Gaussian widths in voxels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigma3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Sigma3 {
    pub fn isotropic(sigma: f64) -> Self {
        Self { x: sigma, y: sigma, z: sigma }
    }

    /// Converts a physical width to voxels given in-plane and slice spacing.
    pub fn physical(sigma_um: f64, pixel_um: f64, slice_um: f64) -> Self {
        Self { x: sigma_um / pixel_um, y: sigma_um / pixel_um, z: sigma_um / slice_um }
    }
}

/// Normalised 1-D Gaussian truncated at radius `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-r..=r).map(|t| (-(t * t) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable Gaussian smoothing with edge replication at the borders.
pub fn gaussian_smooth_3d(v: &MaskVolume, sigma: Sigma3) -> Result<MaskVolume> {
    for s in [sigma.x, sigma.y, sigma.z] {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidInput(format!("sigma {s} must be positive")));
        }
    }
    let (w, h, d) = v.dims();
    let mut data = v.voxels.clone();
    for (axis, s) in [sigma.x, sigma.y, sigma.z].into_iter().enumerate() {
        let kernel = gaussian_kernel(s);
        let (len, stride) = match axis {
            0 => (w, 1),
            1 => (h, w),
            _ => (d, w * h),
        };
        data = convolve_axis(&data, (w, h), len, stride, axis, &kernel);
    }
    Ok(MaskVolume { voxels: data, ..v.clone() })
}

fn convolve_axis(src: &[f64], (w, h): (usize, usize), len: usize, stride: usize, axis: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let last = len as isize - 1;
    (0..src.len())
        .into_par_iter()
        .map(|i| {
            let pos = match axis {
                0 => i % w,
                1 => (i / w) % h,
                _ => i / (w * h),
            } as isize;
            let base = i as isize - pos * stride as isize;
            kernel
                .iter()
                .enumerate()
                .map(|(t, k)| {
                    let p = (pos + t as isize - r).clamp(0, last);
                    k * src[(base + p * stride as isize) as usize]
                })
                .sum()
        })
        .collect()
}

/// Binarises at `t`: voxels `>= t` become 1.
pub fn threshold_volume(v: &MaskVolume, t: f64) -> Result<MaskVolume> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("threshold {t} outside [0, 1]")));
    }
    let voxels = v.voxels.iter().map(|&x| if x >= t { 1.0 } else { 0.0 }).collect();
    Ok(MaskVolume { voxels, ..v.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stack_examples() {
        let m = BinaryMask::from_fn(4, 3, |x, y| x == y);
        let v = stack_slices(std::slice::from_ref(&m), 10.0).unwrap();
        assert_eq!(v.dims(), (4, 3, 1));
        assert_eq!(v.slice_mask(0), m);

        let e = stack_slices(&vec![BinaryMask::empty(5, 5); 3], 10.0).unwrap();
        assert!(e.voxels.iter().all(|&x| x == 0.0));

        let v = stack_slices(&[BinaryMask::full(2, 2), BinaryMask::empty(2, 2), BinaryMask::full(2, 2)], 10.0).unwrap();
        assert_eq!([v.get(1, 1, 0), v.get(1, 1, 1), v.get(1, 1, 2)], [1.0, 0.0, 1.0]);

        assert!(stack_slices(&[BinaryMask::full(2, 2), BinaryMask::full(3, 2)], 10.0).is_err());
        assert!(stack_slices(&[], 10.0).is_err());
    }

    #[test]
    fn kernel_radius_and_normalisation() {
        let k = gaussian_kernel(5.0);
        assert_eq!(k.len(), 31);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(gaussian_kernel(0.5).len(), 5);
        assert_eq!(gaussian_kernel(1.0).len(), 7);
    }

    #[test]
    fn constant_volume_is_fixed() {
        let v = MaskVolume::from_fn(9, 7, 5, 10.0, |_, _, _| 0.37);
        let s = gaussian_smooth_3d(&v, Sigma3::isotropic(5.0)).unwrap();
        assert!(s.voxels.iter().all(|x| (x - 0.37).abs() < 1e-6));
    }

    #[test]
    fn impulse_mass_preserved() {
        let n = 41;
        let v = MaskVolume::from_fn(n, n, n, 10.0, |x, y, z| (x == 20 && y == 20 && z == 20) as u8 as f64);
        let s = gaussian_smooth_3d(&v, Sigma3::isotropic(5.0)).unwrap();
        assert!((s.sum() - 1.0).abs() < 1e-6);
        assert!(s.voxels.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let c = s.get(20, 20, 20);
        assert!(s.voxels.iter().all(|&x| x <= c));
    }

    #[test]
    fn threshold_tie_goes_up() {
        let v = MaskVolume::from_fn(3, 1, 1, 1.0, |x, _, _| x as f64 * 0.25);
        let t = threshold_volume(&v, 0.25).unwrap();
        assert_eq!(t.voxels, vec![0.0, 1.0, 1.0]);
        assert!(threshold_volume(&v, 1.5).is_err());
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let v = MaskVolume::from_fn(2, 2, 2, 1.0, |_, _, _| 0.0);
        assert!(gaussian_smooth_3d(&v, Sigma3::isotropic(0.0)).is_err());
    }

    #[test]
    fn physical_sigma_is_anisotropic() {
        let s = Sigma3::physical(10.0, 1.0, 10.0);
        assert_eq!((s.x, s.y, s.z), (10.0, 10.0, 1.0));
    }

    #[test]
    fn vol1_round_trip_and_header() {
        let v = MaskVolume::from_fn(3, 2, 2, 10.0, |x, y, z| (x + y + z) as f64 / 6.0);
        let b = v.to_bytes();
        assert_eq!(&b[..4], b"VOL1");
        assert_eq!(b.len(), 20 + 4 * 12);
        let back = MaskVolume::from_bytes(&b).unwrap();
        assert_eq!(back.to_bytes(), b);
        assert!(MaskVolume::from_bytes(&b[..30]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn smoothing_is_linear(seed in any::<u64>(), a in 0.0f64..1.0, sigma in 0.5f64..3.0) {
            let v = MaskVolume::from_fn(8, 7, 6, 10.0, |x, y, z| ((seed >> ((x + 3 * y + 5 * z) % 64)) & 1) as f64);
            let scaled = MaskVolume { voxels: v.voxels.iter().map(|x| a * x).collect(), ..v.clone() };
            let s1 = gaussian_smooth_3d(&scaled, Sigma3::isotropic(sigma)).unwrap();
            let s2 = gaussian_smooth_3d(&v, Sigma3::isotropic(sigma)).unwrap();
            for (p, q) in s1.voxels.iter().zip(&s2.voxels) {
                prop_assert!((p - a * q).abs() < 1e-6);
            }
        }

        #[test]
        fn slab_survives_smooth_then_threshold(depth in 2usize..24, cut in 1usize..24, sigma in 0.5f64..6.0, upper in any::<bool>()) {
            // slices are each constant; ones fill every slice on one side of `cut`
            let cut = cut.min(depth - 1);
            let v = MaskVolume::from_fn(6, 5, depth, 10.0, |_, _, z| ((z < cut) == upper) as u8 as f64);
            let s = gaussian_smooth_3d(&v, Sigma3::isotropic(sigma)).unwrap();
            prop_assert_eq!(threshold_volume(&s, 0.5).unwrap().voxels, v.voxels);
        }
    }
}
