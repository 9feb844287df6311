//! Sliding-window tiling, cosine-similarity heatmaps against a query
//! embedding, green-to-red rendering and patch-level scoring.

use std::path::Path;

use serde::Serialize;

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::metrics::Confusion;
use crate::raster::{BinaryMask, ImageRgb};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatchGrid {
    pub width: usize,
    pub height: usize,
    pub window: usize,
    pub stride: usize,
    /// Top-left corners, row-major.
    pub positions: Vec<(usize, usize)>,
}

impl PatchGrid {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Window origins at multiples of `stride` that keep the window inside the
/// image. With `edge_snap`, one more row/column flush with the far edge is
/// added whenever the regular grid leaves pixels uncovered.
pub fn tile(width: usize, height: usize, window: usize, stride: usize, edge_snap: bool) -> Result<PatchGrid> {
    if window == 0 || window > width.min(height) {
        return Err(Error::InvalidGeometry(format!("window {window} does not fit a {width}x{height} image")));
    }
    if stride == 0 {
        return Err(Error::InvalidGeometry("stride must be >= 1".into()));
    }
    let axis = |extent: usize| {
        let mut v: Vec<usize> = (0..=extent - window).step_by(stride).collect();
        let last = *v.last().expect("window fits");
        if edge_snap && last + window < extent {
            v.push(extent - window);
        }
        v
    };
    let xs = axis(width);
    let positions = axis(height).into_iter().flat_map(|y| xs.iter().map(move |&x| (x, y))).collect();
    Ok(PatchGrid { width, height, window, stride, positions })
}

/// `a·b / (‖a‖‖b‖)`.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", a.len()),
            found: format!("length {}", b.len()),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateSample("cosine similarity of a zero vector".into()));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMap {
    pub grid: PatchGrid,
    /// One score per grid position.
    pub scores: Vec<f64>,
    /// Mean score of every window covering each pixel; NaN where no window
    /// reaches.
    pub pixels: Vec<f64>,
}

impl SimilarityMap {
    pub fn pixel(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.grid.width + x]
    }

    /// Writes `x,y,score` rows in grid order.
    pub fn write_scores_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "y", "score"])?;
        for (&(x, y), s) in self.grid.positions.iter().zip(&self.scores) {
            w.write_record([x.to_string(), y.to_string(), s.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        crate::raster::write_atomic(path, &bytes)
    }
}

/// Scores every patch against `query` and averages overlapping windows per
/// pixel.
pub fn similarity_map(grid: &PatchGrid, patch_embeddings: &EmbeddingSet, query: &[f32]) -> Result<SimilarityMap> {
    if patch_embeddings.n() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} patch embeddings", grid.len()),
            found: format!("{}", patch_embeddings.n()),
        });
    }
    let scores = patch_embeddings.rows().map(|e| cosine_similarity(e, query)).collect::<Result<Vec<_>>>()?;
    Ok(accumulate(grid, scores))
}

pub(crate) fn accumulate(grid: &PatchGrid, scores: Vec<f64>) -> SimilarityMap {
    let (w, h) = (grid.width, grid.height);
    let mut sum = vec![0.0f64; w * h];
    let mut count = vec![0u32; w * h];
    for (&(x0, y0), &s) in grid.positions.iter().zip(&scores) {
        for y in y0..y0 + grid.window {
            let row = y * w;
            for i in row + x0..row + x0 + grid.window {
                sum[i] += s;
                count[i] += 1;
            }
        }
    }
    let pixels = sum.iter().zip(&count).map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 }).collect();
    SimilarityMap { grid: grid.clone(), scores, pixels }
}

/// Linear green→yellow→red ramp over `[lo, hi]`; values are clamped.
/// Pixels no window covers are drawn black.
pub fn colormap_green_red(map: &SimilarityMap, lo: f64, hi: f64) -> Result<ImageRgb> {
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("colormap range [{lo}, {hi}] is empty")));
    }
    Ok(ImageRgb::from_fn(map.grid.width, map.grid.height, |x, y| {
        let v = map.pixel(x, y);
        if v.is_nan() {
            [0, 0, 0]
        } else {
            green_red((v - lo) / (hi - lo))
        }
    }))
}

pub(crate) fn green_red(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    if t <= 0.5 {
        [(510.0 * t).round() as u8, 255, 0]
    } else {
        [255, (510.0 * (1.0 - t)).round() as u8, 0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchScore {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub confusion: Confusion,
}

/// Patch-level classification against a pixel annotation.
///
/// A patch is predicted positive when its score is `>= threshold`; it is
/// truly positive when at least half of its pixels are annotated.
pub fn score_against_annotation(map: &SimilarityMap, threshold: f64, gt: &BinaryMask) -> Result<PatchScore> {
    let grid = &map.grid;
    gt.ensure_same_dims((grid.width, grid.height))?;
    let area = grid.window * grid.window;
    let cells = grid.positions.iter().zip(&map.scores).map(|(&(x0, y0), &s)| {
        let covered: usize = (y0..y0 + grid.window)
            .map(|y| gt.bits[y * gt.width + x0..y * gt.width + x0 + grid.window].iter().filter(|&&b| b).count())
            .sum();
        (s >= threshold, 2 * covered >= area)
    });
    let confusion = Confusion::from_pairs(cells);
    Ok(PatchScore { f1: confusion.f1()?, precision: confusion.precision(), recall: confusion.recall(), confusion })
}
