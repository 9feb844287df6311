use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ensure_dir, write_json, Config};
use crate::adapters::{Adapter, SectionMeta};
use crate::error::{Error, Result};
use crate::patch::{colormap_green_red, similarity_map, score_against_annotation, tile, PatchGrid, PatchScore, SimilarityMap};
use crate::raster::{self, BinaryMask, ImageGray, ImageRgb};

/// Inputs of one query-patch classification run.
#[derive(Debug, Clone)]
pub struct PatchRequest<'a> {
    /// RGB input, or greyscale to be passed through `domain_transfer` first.
    pub image: PatchImage,
    /// Top-left corner of the query window.
    pub query_xy: (usize, usize),
    pub embedder: &'a Adapter,
    pub domain_transfer: Option<&'a Adapter>,
    pub annotation: Option<BinaryMask>,
}

#[derive(Debug, Clone)]
pub enum PatchImage {
    Gray(ImageGray),
    Rgb(ImageRgb),
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchClassification {
    pub tool: String,
    pub tool_version: String,
    pub config: Config,
    pub query_xy: (usize, usize),
    pub patches: usize,
    pub min_score: f64,
    pub max_score: f64,
    pub score: Option<PatchScore>,
    #[serde(skip)]
    pub map: SimilarityMap,
}

impl PatchClassification {
    /// Writes `heatmap.png`, `scores.csv` and `report.json`.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_dir(out_dir)?;
        let heat = out_dir.join("heatmap.png");
        raster::write_rgb(&heat, &colormap_green_red(&self.map, self.config.colormap_lo, self.config.colormap_hi)?)?;
        let csv_path = out_dir.join("scores.csv");
        self.map.write_scores_csv(&csv_path)?;
        let json = out_dir.join("report.json");
        write_json(&json, self)?;
        Ok(vec![heat, csv_path, json])
    }
}

/// Tiles the image, embeds every patch plus the query window in one
/// embedder call (query last), and maps cosine similarity to the query.
pub fn patch_classify(req: &PatchRequest, config: &Config) -> Result<PatchClassification> {
    config.validate()?;
    let rgb = match (&req.image, req.domain_transfer) {
        (PatchImage::Rgb(c), None) => c.clone(),
        (PatchImage::Gray(g), None) => g.to_rgb(),
        (PatchImage::Gray(g), Some(dt)) => dt.run_domain_transfer(g, &meta(config))?,
        (PatchImage::Rgb(c), Some(dt)) => dt.run_domain_transfer(&c.to_gray(), &meta(config))?,
    };
    let grid: PatchGrid = tile(rgb.width, rgb.height, config.window, config.stride, config.edge_snap)?;
    let (qx, qy) = req.query_xy;
    if qx + config.window > rgb.width || qy + config.window > rgb.height {
        return Err(Error::InvalidGeometry(format!("query window at ({qx}, {qy}) leaves the image")));
    }
    let mut patches = grid
        .positions
        .iter()
        .map(|&(x, y)| rgb.crop(x, y, config.window, config.window))
        .collect::<Result<Vec<_>>>()?;
    patches.push(rgb.crop(qx, qy, config.window, config.window)?);

    let emb = req.embedder.run_embedder(&patches, &meta(config))?;
    let query = emb.row(emb.n() - 1).to_vec();
    let patch_emb = emb.select(|i| i < grid.len());
    let map = similarity_map(&grid, &patch_emb, &query)?;
    let score = req.annotation.as_ref().map(|gt| score_against_annotation(&map, config.patch_threshold, gt)).transpose()?;
    Ok(PatchClassification {
        tool: super::TOOL_NAME.into(),
        tool_version: super::TOOL_VERSION.into(),
        config: config.clone(),
        query_xy: req.query_xy,
        patches: grid.len(),
        min_score: map.scores.iter().copied().fold(f64::INFINITY, f64::min),
        max_score: map.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        score,
        map,
    })
}

fn meta(config: &Config) -> SectionMeta {
    SectionMeta { id: "patch-map".into(), seed: config.seed, ..Default::default() }
}
