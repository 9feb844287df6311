//! The boundary to external models.
//!
//! Every model role (domain transfer, promptable segmenter, embedder) is an
//! [`Adapter`]: either an external process speaking the file protocol in
//! [`process`], or one of the deterministic built-ins in [`mock`].
//!
//! Protocol, per invocation:
//! - the command template is expanded with `{input}`, `{output}`, `{bbox}`
//!   and `{meta}`;
//! - images and masks travel as PNG, embeddings as `EMB1`, the bbox as
//!   `{"x_min":..,"y_min":..,"x_max":..,"y_max":..}`;
//! - the process exits 0 on success and writes its output atomically;
//! - `STAINSHIFT_SEED` is set in its environment.

pub mod mock;
pub mod process;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::raster::{AnyImage, BBox, BinaryMask, ImageGray, ImageRgb};

pub use mock::serve_builtin;
pub use process::AdapterSpec;

/// Environment variable carrying the run seed into adapter processes.
pub const SEED_ENV: &str = "STAINSHIFT_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterKind {
    DomainTransfer,
    Segmenter,
    Embedder,
}

/// Per-invocation side information, also written as the `{meta}` JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SectionMeta {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_mask_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_he_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    #[serde(default)]
    pub seed: u64,
}

/// Input to a promptable segmenter. Only the single best mask is requested.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmenterRequest {
    pub image: AnyImage,
    pub bbox: BBox,
    pub multimask: bool,
}

impl SegmenterRequest {
    pub fn new(image: AnyImage, bbox: BBox) -> Result<Self> {
        let (w, h) = image.dims();
        if !bbox.fits_in(w, h) {
            return Err(Error::InvalidGeometry(format!("bbox {bbox:?} outside {w}x{h} image")));
        }
        Ok(Self { image, bbox, multimask: false })
    }
}

/// A model role implementation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Adapter {
    /// Deterministic colourisation `v -> (205 - 0.3v, 120 + 0.2v, 160 - 0.1v)`.
    PseudoStain,
    /// Returns the section's paired H&E image from the meta record.
    PairedHe,
    /// Replicates the grey channel into RGB.
    GrayToRgb,
    /// Returns the ground-truth mask named in the meta record.
    Oracle,
    /// Ground truth eroded `k` times with a 3×3 square.
    ErodeOracle { k: usize },
    /// Otsu threshold computed and applied inside the bbox only.
    Threshold,
    /// 64-bin intensity histogram, L2-normalised.
    Histogram,
    /// Same vector for every patch.
    Constant,
    External(AdapterSpec),
}

impl Adapter {
    /// Role this adapter can fill.
    pub fn kind(&self) -> AdapterKind {
        match self {
            Adapter::PseudoStain | Adapter::PairedHe | Adapter::GrayToRgb => AdapterKind::DomainTransfer,
            Adapter::Oracle | Adapter::ErodeOracle { .. } | Adapter::Threshold => AdapterKind::Segmenter,
            Adapter::Histogram | Adapter::Constant => AdapterKind::Embedder,
            Adapter::External(spec) => spec.kind,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Adapter::PseudoStain => "pseudo-stain".into(),
            Adapter::PairedHe => "paired-he".into(),
            Adapter::GrayToRgb => "gray-to-rgb".into(),
            Adapter::Oracle => "oracle".into(),
            Adapter::ErodeOracle { k } => format!("erode-oracle({k})"),
            Adapter::Threshold => "threshold".into(),
            Adapter::Histogram => "histogram".into(),
            Adapter::Constant => "constant".into(),
            Adapter::External(spec) => format!("external({})", spec.command.first().map_or("", String::as_str)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Adapter::External(spec) => spec.validate(),
            _ => Ok(()),
        }
    }

    fn expect_kind(&self, kind: AdapterKind) -> Result<()> {
        if self.kind() != kind {
            return Err(Error::InvalidInput(format!("adapter {} is a {:?}, not a {kind:?}", self.name(), self.kind())));
        }
        Ok(())
    }

    pub fn run_domain_transfer(&self, img: &ImageGray, meta: &SectionMeta) -> Result<ImageRgb> {
        self.expect_kind(AdapterKind::DomainTransfer)?;
        let out = match self {
            Adapter::External(spec) => process::domain_transfer(spec, img, meta)?,
            _ => mock::domain_transfer(self, img, meta)?,
        };
        if out.dims() != img.dims() {
            return Err(Error::ProtocolViolation(format!(
                "domain transfer returned {}x{} for a {}x{} input",
                out.width, out.height, img.width, img.height
            )));
        }
        Ok(out)
    }

    pub fn run_segmenter(&self, req: &SegmenterRequest, meta: &SectionMeta) -> Result<BinaryMask> {
        self.expect_kind(AdapterKind::Segmenter)?;
        let out = match self {
            Adapter::External(spec) => process::segment(spec, req, meta)?,
            _ => mock::segment(self, req, meta)?,
        };
        if out.dims() != req.image.dims() {
            let (w, h) = req.image.dims();
            return Err(Error::ProtocolViolation(format!(
                "segmenter returned a {}x{} mask for a {w}x{h} input",
                out.width, out.height
            )));
        }
        Ok(out)
    }

    pub fn run_embedder(&self, patches: &[ImageRgb], meta: &SectionMeta) -> Result<EmbeddingSet> {
        self.expect_kind(AdapterKind::Embedder)?;
        if patches.is_empty() {
            return Err(Error::InvalidInput("embedder needs at least one patch".into()));
        }
        let out = match self {
            Adapter::External(spec) => process::embed(spec, patches, meta)?,
            _ => mock::embed(self, patches)?,
        };
        if out.n() != patches.len() {
            return Err(Error::ProtocolViolation(format!(
                "embedder returned {} rows for {} patches",
                out.n(),
                patches.len()
            )));
        }
        Ok(out)
    }
}
