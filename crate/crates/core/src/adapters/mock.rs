//! Built-in deterministic adapters. Each is a pure function of its inputs.

use std::path::Path;

use super::{Adapter, AdapterKind, SectionMeta, SegmenterRequest};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::raster::{self, erode, AnyImage, BBox, BinaryMask, ImageGray, ImageRgb, StructuringElement};

pub const HISTOGRAM_BINS: usize = 64;
const CONSTANT_DIM: usize = 8;

pub(super) fn domain_transfer(a: &Adapter, img: &ImageGray, meta: &SectionMeta) -> Result<ImageRgb> {
    match a {
        Adapter::PseudoStain => Ok(pseudo_stain(img)),
        Adapter::GrayToRgb => Ok(img.to_rgb()),
        Adapter::PairedHe => {
            let p = meta
                .paired_he_path
                .as_ref()
                .ok_or_else(|| Error::InvalidInput(format!("section {} has no paired H&E image", meta.id)))?;
            raster::read_rgb(p)
        }
        other => unreachable!("{} is not a domain-transfer adapter", other.name()),
    }
}

/// `v -> (205 - 0.3v, 120 + 0.2v, 160 - 0.1v)`, rounded and clamped.
pub fn pseudo_stain(img: &ImageGray) -> ImageRgb {
    let ch = |x: f64| x.round().clamp(0.0, 255.0) as u8;
    let data = img
        .data
        .iter()
        .flat_map(|&v| {
            let v = v as f64;
            [ch(205.0 - 0.3 * v), ch(120.0 + 0.2 * v), ch(160.0 - 0.1 * v)]
        })
        .collect();
    ImageRgb { width: img.width, height: img.height, data }
}

pub(super) fn segment(a: &Adapter, req: &SegmenterRequest, meta: &SectionMeta) -> Result<BinaryMask> {
    match a {
        Adapter::Oracle => oracle_mask(meta),
        Adapter::ErodeOracle { k } => {
            let se = StructuringElement::square(3);
            let mut m = oracle_mask(meta)?;
            for _ in 0..*k {
                m = erode(&m, &se);
            }
            Ok(m)
        }
        Adapter::Threshold => Ok(otsu_in_box(&req.image, &req.bbox)),
        other => unreachable!("{} is not a segmenter adapter", other.name()),
    }
}

fn oracle_mask(meta: &SectionMeta) -> Result<BinaryMask> {
    let p = meta
        .gt_mask_path
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("section {} has no ground-truth path for the oracle", meta.id)))?;
    raster::read_mask(p)
}

/// Otsu's threshold over the pixels inside `bbox`; pixels strictly above it
/// and inside the box are foreground.
pub fn otsu_in_box(image: &AnyImage, bbox: &BBox) -> BinaryMask {
    let gray = image.to_gray();
    let mut hist = [0u64; 256];
    for y in bbox.y_min..=bbox.y_max {
        for x in bbox.x_min..=bbox.x_max {
            hist[gray.get(x, y) as usize] += 1;
        }
    }
    let t = otsu_threshold(&hist);
    BinaryMask::from_fn(gray.width, gray.height, |x, y| bbox.contains(x, y) && gray.get(x, y) > t)
}

/// Level maximising between-class variance; class 0 is `v <= t`.
pub fn otsu_threshold(hist: &[u64; 256]) -> u8 {
    let total: u64 = hist.iter().sum();
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0u64, 0.0f64);
    let (mut best_t, mut best_var) = (0u8, -1.0f64);
    for (t, &c) in hist.iter().enumerate() {
        w0 += c;
        sum0 += t as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (sum_all - sum0) / w1 as f64;
        let var = w0 as f64 * w1 as f64 * (m0 - m1).powi(2);
        if var > best_var {
            best_var = var;
            best_t = t as u8;
        }
    }
    best_t
}

pub(super) fn embed(a: &Adapter, patches: &[ImageRgb]) -> Result<EmbeddingSet> {
    let rows: Vec<Vec<f32>> = match a {
        Adapter::Histogram => patches.iter().map(histogram_embedding).collect(),
        Adapter::Constant => vec![vec![1.0; CONSTANT_DIM]; patches.len()],
        other => unreachable!("{} is not an embedder adapter", other.name()),
    };
    EmbeddingSet::from_rows(&rows, a.name())
}

/// 64-bin histogram of the channel-mean intensity, L2-normalised.
pub fn histogram_embedding(img: &ImageRgb) -> Vec<f32> {
    let mut counts = [0u64; HISTOGRAM_BINS];
    for v in img.to_gray().data {
        counts[v as usize * HISTOGRAM_BINS / 256] += 1;
    }
    let norm = counts.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    counts.iter().map(|&c| (c as f64 / norm) as f32).collect()
}

/// Runs a built-in adapter over protocol files, as an external process
/// would. Used by the CLI's `mock-adapter` command.
pub fn serve_builtin(a: &Adapter, input: &Path, output: &Path, bbox: Option<&str>, meta: Option<&Path>) -> Result<()> {
    let meta: SectionMeta = match meta {
        Some(p) => serde_json::from_slice(&std::fs::read(p).map_err(|e| Error::io(p, e))?)?,
        None => SectionMeta::default(),
    };
    match a.kind() {
        AdapterKind::DomainTransfer => {
            let img = raster::read_gray(input)?;
            raster::write_rgb(output, &a.run_domain_transfer(&img, &meta)?)
        }
        AdapterKind::Segmenter => {
            let bbox: BBox = match (bbox, meta.bbox) {
                (Some(s), _) => serde_json::from_str(s)?,
                (None, Some(b)) => b,
                (None, None) => return Err(Error::InvalidInput("segmenter needs a bbox".into())),
            };
            let image = AnyImage::Rgb(raster::read_rgb(input)?);
            let req = SegmenterRequest::new(image, bbox)?;
            raster::write_mask(output, &a.run_segmenter(&req, &meta)?)
        }
        AdapterKind::Embedder => {
            let mut files: Vec<_> = std::fs::read_dir(input)
                .map_err(|e| Error::io(input, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "png"))
                .collect();
            files.sort();
            let patches = files.iter().map(raster::read_rgb).collect::<Result<Vec<_>>>()?;
            a.run_embedder(&patches, &meta)?.write(output)
        }
    }
}
