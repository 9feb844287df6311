use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ensure_dir, ordered_map, segment_entry, write_json, ArmConfig, Config, DatasetManifest, RunOptions};
use crate::error::{Error, Result};
use crate::volume::{gaussian_smooth_3d, stack_slices, threshold_volume, MaskVolume, Sigma3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeReport {
    pub tool: String,
    pub tool_version: String,
    pub config: Config,
    /// Slice ids in stacking order.
    pub slices: Vec<String>,
    pub dims: (usize, usize, usize),
    pub sigma: Sigma3,
    pub foreground_voxels_stacked: usize,
    pub foreground_voxels_final: usize,
    #[serde(skip)]
    pub stacked: Option<MaskVolume>,
    #[serde(skip)]
    pub smoothed: Option<MaskVolume>,
    #[serde(skip)]
    pub binary: Option<MaskVolume>,
}

impl VolumeReport {
    /// Writes `stacked.vol`, `smoothed.vol`, `volume.vol`, a PNG stack of the
    /// final volume under `slices/`, and `report.json`.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_dir(out_dir)?;
        let mut written = Vec::new();
        for (name, v) in [("stacked.vol", &self.stacked), ("smoothed.vol", &self.smoothed), ("volume.vol", &self.binary)] {
            if let Some(v) = v {
                let p = out_dir.join(name);
                v.write(&p)?;
                written.push(p);
            }
        }
        if let Some(b) = &self.binary {
            written.extend(b.write_png_stack(out_dir.join("slices"), "slice")?);
        }
        let json = out_dir.join("report.json");
        write_json(&json, self)?;
        written.push(json);
        Ok(written)
    }
}

/// Segments every slice with `arm`, stacks the masks in id order, smooths
/// with the 3-D Gaussian and thresholds.
pub fn reconstruct_volume(manifest: &DatasetManifest, arm: &ArmConfig, config: &Config, opts: RunOptions) -> Result<VolumeReport> {
    config.validate()?;
    arm.validate()?;
    let mut entries = manifest.entries.clone();
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let masks = ordered_map(&entries, opts.workers, |e| {
        segment_entry(e, arm, config).map_err(|err| Error::InvalidInput(format!("slice {}: {err}", e.id)))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let stacked = stack_slices(&masks, config.slice_spacing_um)?;
    let sigma = match config.sigma3d_um {
        Some(um) => Sigma3::physical(um, config.pixel_spacing_um, config.slice_spacing_um),
        None => Sigma3::isotropic(config.sigma3d),
    };
    let smoothed = gaussian_smooth_3d(&stacked, sigma)?;
    let binary = threshold_volume(&smoothed, config.volume_threshold)?;
    let count = |v: &MaskVolume| v.voxels.iter().filter(|&&x| x >= 0.5).count();
    Ok(VolumeReport {
        tool: super::TOOL_NAME.into(),
        tool_version: super::TOOL_VERSION.into(),
        config: config.clone(),
        slices: entries.iter().map(|e| e.id.clone()).collect(),
        dims: stacked.dims(),
        sigma,
        foreground_voxels_stacked: count(&stacked),
        foreground_voxels_final: count(&binary),
        stacked: Some(stacked),
        smoothed: Some(smoothed),
        binary: Some(binary),
    })
}
