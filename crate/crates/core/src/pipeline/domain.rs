use std::path::Path;

use serde::{Deserialize, Serialize};

use super::segmentation::section_meta;
use super::{ensure_dir, write_json, Config, DatasetManifest};
use crate::adapters::{Adapter, SectionMeta};
use crate::distance::{gaussian_kl, knn_kl_divergence};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::raster::{self, ImageRgb};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlReport {
    pub tool: String,
    pub tool_version: String,
    pub config: Config,
    pub n: usize,
    pub k: usize,
    /// k-NN KL(raw modality ‖ H&E).
    pub kl_raw_he: f64,
    /// k-NN KL(domain-transferred ‖ H&E), when a transfer adapter is set.
    pub kl_transferred_he: Option<f64>,
    /// `kl_raw_he - kl_transferred_he`.
    pub reduction: Option<f64>,
    /// Diagonal-Gaussian cross-checks; absent when a fit is degenerate.
    pub gaussian_kl_raw_he: Option<f64>,
    pub gaussian_kl_transferred_he: Option<f64>,
}

impl KlReport {
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        ensure_dir(out_dir)?;
        write_json(&out_dir.join("report.json"), self)
    }
}

/// Embeds raw images, their domain-transferred versions and the paired H&E
/// images, then compares each set to H&E with the k-NN KL estimator.
pub fn evaluate_domain_distance(
    manifest: &DatasetManifest,
    embedder: &Adapter,
    domain_transfer: Option<&Adapter>,
    config: &Config,
) -> Result<KlReport> {
    config.validate()?;
    manifest.require_paired_he()?;
    let k = config.knn_k;
    if manifest.len() <= k {
        return Err(Error::DegenerateSample(format!("{} paired images, need more than k={k}", manifest.len())));
    }

    let mut raw = Vec::with_capacity(manifest.len());
    let mut he = Vec::with_capacity(manifest.len());
    let mut transferred = Vec::new();
    for entry in &manifest.entries {
        let mut img = raster::read_gray(&entry.image_path)?;
        if config.invert_input {
            img = raster::invert_grayscale(&img);
        }
        if let Some(dt) = domain_transfer {
            transferred.push(dt.run_domain_transfer(&img, &section_meta(entry, config))?);
        }
        raw.push(img.to_rgb());
        he.push(raster::read_rgb(entry.paired_he_path.as_ref().expect("checked above"))?);
    }

    let embed = |images: &[ImageRgb], tag: &str| -> Result<EmbeddingSet> {
        let meta = SectionMeta { id: tag.into(), seed: config.seed, ..Default::default() };
        let mut e = embedder.run_embedder(images, &meta)?;
        e.source_tag = tag.into();
        Ok(e)
    };
    let e_raw = embed(&raw, "raw")?;
    let e_he = embed(&he, "he")?;
    let kl_raw_he = knn_kl_divergence(&e_raw, &e_he, k)?;
    let (kl_transferred_he, g_tr) = if transferred.is_empty() {
        (None, None)
    } else {
        let e_tr = embed(&transferred, "transferred")?;
        (Some(knn_kl_divergence(&e_tr, &e_he, k)?), gaussian_kl(&e_tr, &e_he).ok())
    };
    Ok(KlReport {
        tool: super::TOOL_NAME.into(),
        tool_version: super::TOOL_VERSION.into(),
        config: config.clone(),
        n: manifest.len(),
        k,
        kl_raw_he,
        reduction: kl_transferred_he.map(|t| kl_raw_he - t),
        kl_transferred_he,
        gaussian_kl_raw_he: gaussian_kl(&e_raw, &e_he).ok(),
        gaussian_kl_transferred_he: g_tr,
    })
}
