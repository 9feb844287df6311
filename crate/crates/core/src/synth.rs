//! Procedural fixtures: epidermis-like bands, cell instance maps, paired
//! two-domain image sets, a cylinder phantom and two-texture images. Used by
//! the examples and tests so every pipeline path runs without clinical data.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pipeline::{DatasetManifest, ManifestEntry};
use crate::raster::{self, BinaryMask, ImageGray, ImageRgb, LabelMap, StructuringElement};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct SyntheticSection {
    pub image: ImageGray,
    pub gt: BinaryMask,
    pub dont_care: BinaryMask,
    pub low_signal: BinaryMask,
}

/// A bright wavy band (the "epidermis") over darker tissue, with a dark
/// region above it. The don't-care box straddles the band near a random
/// column; the low-signal region sits in the bottom-right corner.
pub fn epidermis_section(width: usize, height: usize, rng: &mut impl Rng) -> SyntheticSection {
    let h = height as f64;
    let base = h * rng.random_range(0.25..0.35);
    let amp = h * rng.random_range(0.03..0.08);
    let period = width as f64 * rng.random_range(0.5..1.2);
    let phase = rng.random_range(0.0..2.0 * PI);
    let thick0 = h * rng.random_range(0.12..0.18);
    let thick1 = h * rng.random_range(0.01..0.04);

    let top: Vec<f64> = (0..width).map(|x| base + amp * (2.0 * PI * x as f64 / period + phase).sin()).collect();
    let bottom: Vec<f64> =
        (0..width).map(|x| top[x] + thick0 + thick1 * (2.0 * PI * x as f64 / (0.6 * period)).cos()).collect();
    let band = BinaryMask::from_fn(width, height, |x, y| (y as f64) >= top[x] && (y as f64) < bottom[x]);
    // annotations are closed shapes: no single-pixel notches along the edge
    let gt = raster::binary_closing(&band, &StructuringElement::default());

    let mut noise = |lo: i32, hi: i32| rng.random_range(lo..hi);
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for (x, &t) in top.iter().enumerate() {
            let v = if gt.get(x, y) {
                190 + noise(-15, 16)
            } else if (y as f64) < t {
                15 + noise(0, 11)
            } else {
                105 + noise(-15, 16)
            };
            data.push(v.clamp(0, 255) as u8);
        }
    }

    let fx = rng.random_range(width / 8..width - width / 8 - 10);
    let fy0 = top[fx].max(6.0) as usize - 5;
    let fy1 = ((bottom[fx] as usize) + 5).min(height - 1);
    let dont_care = BinaryMask::from_fn(width, height, |x, y| (fx..fx + 10).contains(&x) && (fy0..=fy1).contains(&y));
    let low_signal = BinaryMask::from_fn(width, height, |x, y| x >= width * 3 / 4 && y >= height * 9 / 10);

    let image = ImageGray { width, height, data, microns_per_pixel: Some(1.0) };
    SyntheticSection { image, gt, dont_care, low_signal }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `n` band sections plus `manifest.json` into `dir`; returns the
/// manifest path.
pub fn write_segmentation_fixture(dir: &Path, n: usize, width: usize, height: usize, seed: u64) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut r = rng(seed);
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let s = epidermis_section(width, height, &mut r);
        let id = format!("section_{i:03}");
        let name = |kind: &str| format!("{id}_{kind}.png");
        raster::write_gray(dir.join(name("image")), &s.image)?;
        raster::write_mask(dir.join(name("gt")), &s.gt)?;
        raster::write_mask(dir.join(name("dontcare")), &s.dont_care)?;
        raster::write_mask(dir.join(name("lowsignal")), &s.low_signal)?;
        let mut e = ManifestEntry::new(&id, name("image"), name("gt"));
        e.dont_care_path = Some(name("dontcare").into());
        e.low_signal_mask_path = Some(name("lowsignal").into());
        entries.push(e);
    }
    let path = dir.join("manifest.json");
    DatasetManifest::new(entries).write(&path)?;
    Ok(path)
}

/// Non-overlapping, non-touching discs labelled `1..=count` (fewer if the
/// canvas fills up).
pub fn cell_label_map(width: usize, height: usize, count: usize, rng: &mut impl Rng) -> LabelMap {
    let mut labels = vec![0u32; width * height];
    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    let mut attempts = 0;
    while placed.len() < count && attempts < 10_000 {
        attempts += 1;
        let r = rng.random_range(3.5..7.0);
        let cx = rng.random_range(r + 1.0..width as f64 - r - 1.0);
        let cy = rng.random_range(r + 1.0..height as f64 - r - 1.0);
        if placed.iter().any(|&(x, y, q)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() < q + r + 3.0) {
            continue;
        }
        placed.push((cx, cy, r));
        let id = placed.len() as u32;
        for y in 0..height {
            for x in 0..width {
                if (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r {
                    labels[y * width + x] = id;
                }
            }
        }
    }
    LabelMap { width, height, labels }
}

/// Writes `n` cell images with their instance maps and a manifest. When
/// `pred` is given, its output for each ground truth is written as the
/// precomputed prediction.
pub fn write_cell_fixture(
    dir: &Path,
    n: usize,
    cells: usize,
    seed: u64,
    pred: Option<&dyn Fn(&LabelMap) -> LabelMap>,
) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut r = rng(seed);
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let gt = cell_label_map(96, 96, cells, &mut r);
        let img = ImageGray::from_fn(96, 96, |x, y| {
            let base: i32 = if gt.get(x, y) != 0 { 60 } else { 170 };
            (base + r.random_range(-10..11)).clamp(0, 255) as u8
        });
        let id = format!("cells_{i:03}");
        raster::write_gray(dir.join(format!("{id}_image.png")), &img)?;
        raster::write_label_map(dir.join(format!("{id}_labels.png")), &gt)?;
        let mut e = ManifestEntry::new(&id, format!("{id}_image.png"), format!("{id}_labels.png"));
        if let Some(f) = pred {
            raster::write_label_map(dir.join(format!("{id}_pred.png")), &f(&gt))?;
            e.pred_label_path = Some(format!("{id}_pred.png").into());
        }
        entries.push(e);
    }
    let path = dir.join("manifest.json");
    DatasetManifest::new(entries).write(&path)?;
    Ok(path)
}

/// Dark grey noise texture standing in for the raw optical modality.
pub fn raw_texture(size: usize, rng: &mut impl Rng) -> ImageGray {
    let mean = rng.random_range(30..90);
    let spread = rng.random_range(8..25);
    ImageGray::from_fn(size, size, |_, _| (mean + rng.random_range(-spread..=spread)).clamp(0, 255) as u8)
}

/// Pink/purple noise texture standing in for H&E: an independent grey
/// texture coloured with the pseudo-stain palette, plus per-channel jitter.
/// A transfer that reproduces the palette therefore lands near this domain.
pub fn he_texture(size: usize, rng: &mut impl Rng) -> ImageRgb {
    let stained = crate::adapters::mock::pseudo_stain(&raw_texture(size, rng));
    let mut data = stained.data;
    for c in &mut data {
        *c = (*c as i32 + rng.random_range(-3..=3)).clamp(0, 255) as u8;
    }
    ImageRgb { width: size, height: size, data }
}

/// Paired raw/H&E images (`n` pairs of `size`×`size`) with a manifest.
pub fn write_domain_fixture(dir: &Path, n: usize, size: usize, seed: u64) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut r = rng(seed);
    let full = BinaryMask::full(size, size);
    raster::write_mask(dir.join("full_mask.png"), &full)?;
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("pair_{i:03}");
        raster::write_gray(dir.join(format!("{id}_raw.png")), &raw_texture(size, &mut r))?;
        raster::write_rgb(dir.join(format!("{id}_he.png")), &he_texture(size, &mut r))?;
        let mut e = ManifestEntry::new(&id, format!("{id}_raw.png"), "full_mask.png");
        e.paired_he_path = Some(format!("{id}_he.png").into());
        entries.push(e);
    }
    let path = dir.join("manifest.json");
    DatasetManifest::new(entries).write(&path)?;
    Ok(path)
}

/// Cylinder with its axis along x, centred at `(cy, cz)` in the (row, slice)
/// plane. Returns one mask per slice.
pub fn cylinder_phantom(width: usize, height: usize, depth: usize, cy: f64, cz: f64, radius: f64) -> Vec<BinaryMask> {
    (0..depth)
        .map(|z| {
            BinaryMask::from_fn(width, height, |_, y| (y as f64 - cy).powi(2) + (z as f64 - cz).powi(2) <= radius * radius)
        })
        .collect()
}

/// Writes phantom slices (image bright where the phantom is) and a manifest
/// with ids sorting in slice order. Empty slices get an empty image and
/// ground truth.
pub fn write_volume_fixture(dir: &Path, slices: &[BinaryMask]) -> Result<PathBuf> {
    create_dir(dir)?;
    let mut entries = Vec::with_capacity(slices.len());
    for (z, m) in slices.iter().enumerate() {
        let id = format!("slice_{z:04}");
        let img = ImageGray::from_fn(m.width, m.height, |x, y| if m.get(x, y) { 200 } else { 40 });
        raster::write_gray(dir.join(format!("{id}_image.png")), &img)?;
        raster::write_mask(dir.join(format!("{id}_gt.png")), m)?;
        entries.push(ManifestEntry::new(&id, format!("{id}_image.png"), format!("{id}_gt.png")));
    }
    let path = dir.join("manifest.json");
    DatasetManifest::new(entries).write(&path)?;
    Ok(path)
}

/// Dark noise left of `split_x`, bright noise right of it; the two halves
/// share no intensity level.
pub fn two_texture_image(width: usize, height: usize, split_x: usize, rng: &mut impl Rng) -> ImageRgb {
    ImageRgb::from_fn(width, height, |x, _| {
        let v = if x < split_x { rng.random_range(20u8..100) } else { rng.random_range(156u8..236) };
        [v, v, v]
    })
}
