//! End-to-end experiment runs over dataset manifests, and their reports.

mod boxplot;
mod cells;
mod config;
mod domain;
mod manifest;
mod patchmap;
mod segmentation;
mod volume;

pub use boxplot::{emit_boxplot, BoxGroup};
pub use cells::{evaluate_cells, CellReport, CellRow, MeanMetrics, PredSource};
pub use config::{ArmConfig, Config};
pub use domain::{evaluate_domain_distance, KlReport};
pub use manifest::{check_manifest, validate_manifest, DatasetManifest, ManifestEntry, MANIFEST_VERSION};
pub use patchmap::{patch_classify, PatchClassification, PatchImage, PatchRequest};
pub use segmentation::{
    evaluate_segmentation, postprocess, segment_entry, EvaluationReport, PairedTest, SectionRow,
};
pub use volume::{reconstruct_volume, VolumeReport};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Execution knobs that never change results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Concurrent sections (and therefore adapter processes).
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Error,
}

/// Maps `f` over `items` on a pool of `workers` threads, keeping input order.
pub(crate) fn ordered_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync + Send) -> Result<Vec<R>> {
    if workers <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    crate::raster::write_atomic(path, &bytes)
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
