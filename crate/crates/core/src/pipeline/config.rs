use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adapters::{Adapter, AdapterKind};
use crate::error::{Error, Result};
use crate::metrics::StdMode;
use crate::raster::StructuringElement;
use crate::stats::WilcoxonOptions;

/// One side of a comparison: optional domain transfer, then a segmenter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmConfig {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_transfer: Option<Adapter>,
    pub segmenter: Adapter,
}

impl ArmConfig {
    pub fn new(label: impl Into<String>, domain_transfer: Option<Adapter>, segmenter: Adapter) -> Self {
        Self { label: label.into(), domain_transfer, segmenter }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = &self.domain_transfer {
            expect_kind(dt, AdapterKind::DomainTransfer, &self.label)?;
        }
        expect_kind(&self.segmenter, AdapterKind::Segmenter, &self.label)
    }
}

fn expect_kind(a: &Adapter, kind: AdapterKind, ctx: &str) -> Result<()> {
    a.validate()?;
    if a.kind() != kind {
        return Err(Error::InvalidInput(format!("{ctx}: adapter {} cannot act as {kind:?}", a.name())));
    }
    Ok(())
}

/// Every tunable of a run. Embedded verbatim in each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub height_factor: f64,
    pub hole_max_area: usize,
    /// Side of the square closing element.
    pub closing_kernel: usize,
    pub iou_threshold: f64,
    pub knn_k: usize,
    /// Gaussian σ in voxels, all axes.
    pub sigma3d: f64,
    /// When set, σ in microns per axis instead of `sigma3d`.
    pub sigma3d_um: Option<f64>,
    pub pixel_spacing_um: f64,
    pub slice_spacing_um: f64,
    pub volume_threshold: f64,
    pub window: usize,
    pub stride: usize,
    pub edge_snap: bool,
    pub patch_threshold: f64,
    pub colormap_lo: f64,
    pub colormap_hi: f64,
    /// Invert grey levels before any model sees the image.
    pub invert_input: bool,
    pub std_mode: StdMode,
    pub wilcoxon: WilcoxonOptions,
    pub seed: u64,
    pub arm_a: Option<ArmConfig>,
    pub arm_b: Option<ArmConfig>,
    pub embedder: Option<Adapter>,
    pub domain_transfer: Option<Adapter>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            height_factor: 1.15,
            hole_max_area: 100,
            closing_kernel: 3,
            iou_threshold: 0.5,
            knn_k: 5,
            sigma3d: 5.0,
            sigma3d_um: None,
            pixel_spacing_um: 1.0,
            slice_spacing_um: 10.0,
            volume_threshold: 0.5,
            window: 256,
            stride: 64,
            edge_snap: false,
            patch_threshold: 0.5,
            colormap_lo: 0.0,
            colormap_hi: 1.0,
            invert_input: false,
            std_mode: StdMode::Sample,
            wilcoxon: WilcoxonOptions::default(),
            seed: 0,
            arm_a: None,
            arm_b: None,
            embedder: None,
            domain_transfer: None,
        }
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = serde_json::from_slice(&bytes)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.height_factor >= 1.0) {
            errs.push(format!("height_factor {} must be >= 1", self.height_factor));
        }
        if self.closing_kernel == 0 {
            errs.push("closing_kernel must be >= 1".into());
        }
        if !(self.iou_threshold >= 0.5 && self.iou_threshold < 1.0) {
            errs.push(format!("iou_threshold {} must lie in [0.5, 1)", self.iou_threshold));
        }
        if self.knn_k == 0 {
            errs.push("knn_k must be >= 1".into());
        }
        if !(self.sigma3d > 0.0) || self.sigma3d_um.is_some_and(|s| !(s > 0.0)) {
            errs.push("3-D sigma must be positive".into());
        }
        if !(self.pixel_spacing_um > 0.0 && self.slice_spacing_um > 0.0) {
            errs.push("spacings must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.volume_threshold) {
            errs.push(format!("volume_threshold {} outside [0, 1]", self.volume_threshold));
        }
        if self.window == 0 || self.stride == 0 {
            errs.push("window and stride must be >= 1".into());
        }
        if !(self.colormap_lo < self.colormap_hi) {
            errs.push("colormap_lo must be below colormap_hi".into());
        }
        for arm in [&self.arm_a, &self.arm_b].into_iter().flatten() {
            if let Err(e) = arm.validate() {
                errs.push(e.to_string());
            }
        }
        if let Some(e) = &self.embedder {
            if let Err(e) = expect_kind(e, AdapterKind::Embedder, "embedder") {
                errs.push(e.to_string());
            }
        }
        if let Some(d) = &self.domain_transfer {
            if let Err(e) = expect_kind(d, AdapterKind::DomainTransfer, "domain_transfer") {
                errs.push(e.to_string());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(errs.join("; ")))
        }
    }

    pub fn closing_element(&self) -> StructuringElement {
        StructuringElement::square(self.closing_kernel)
    }
}
