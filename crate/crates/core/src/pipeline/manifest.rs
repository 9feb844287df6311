use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: PathBuf,
    pub gt_mask_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dont_care_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_signal_mask_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_he_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_tag: Option<String>,
    /// Precomputed instance prediction, for cell evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_label_path: Option<PathBuf>,
}

impl ManifestEntry {
    pub fn new(id: impl Into<String>, image_path: impl Into<PathBuf>, gt_mask_path: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            image_path: image_path.into(),
            gt_mask_path: gt_mask_path.into(),
            dont_care_path: None,
            low_signal_mask_path: None,
            paired_he_path: None,
            group_tag: None,
            pred_label_path: None,
        }
    }

    fn paths_mut(&mut self) -> impl Iterator<Item = &mut PathBuf> {
        [&mut self.image_path, &mut self.gt_mask_path].into_iter().chain(
            [
                self.dont_care_path.as_mut(),
                self.low_signal_mask_path.as_mut(),
                self.paired_he_path.as_mut(),
                self.pred_label_path.as_mut(),
            ]
            .into_iter()
            .flatten(),
        )
    }

    fn named_paths(&self) -> Vec<(&'static str, &Path)> {
        let mut v = vec![("image_path", self.image_path.as_path()), ("gt_mask_path", self.gt_mask_path.as_path())];
        let opt = [
            ("dont_care_path", &self.dont_care_path),
            ("low_signal_mask_path", &self.low_signal_mask_path),
            ("paired_he_path", &self.paired_he_path),
            ("pred_label_path", &self.pred_label_path),
        ];
        v.extend(opt.iter().filter_map(|(n, p)| p.as_deref().map(|p| (*n, p))));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub entries: Vec<ManifestEntry>,
    /// Entries whose files exist but could not be decoded. They are kept so
    /// runs can record them as failed sections.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self { version: MANIFEST_VERSION, entries, warnings: Vec::new() }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::raster::write_atomic(path, &serde_json::to_vec_pretty(self)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fails unless every entry names a paired H&E image.
    pub fn require_paired_he(&self) -> Result<()> {
        let missing: Vec<String> = self
            .entries
            .iter()
            .filter(|e| e.paired_he_path.is_none())
            .map(|e| format!("entry {}: paired_he_path is required", e.id))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(missing))
        }
    }
}

/// Parses a manifest, resolves relative paths against its directory and
/// checks ids, file existence and per-entry dimension agreement. All
/// violations are collected into one [`Error::Validation`].
pub fn validate_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut manifest: DatasetManifest = serde_json::from_slice(&bytes)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    for e in &mut manifest.entries {
        for p in e.paths_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    check_manifest(&mut manifest)?;
    Ok(manifest)
}

/// Runs the validation rules on an in-memory manifest with resolved paths.
pub fn check_manifest(manifest: &mut DatasetManifest) -> Result<()> {
    let mut errs = Vec::new();
    manifest.warnings.clear();
    if manifest.version != MANIFEST_VERSION {
        errs.push(format!("unsupported manifest version {} (expected {MANIFEST_VERSION})", manifest.version));
    }
    if manifest.entries.is_empty() {
        errs.push("manifest has no entries".into());
    }
    let mut seen = HashSet::new();
    for e in &manifest.entries {
        if e.id.is_empty() {
            errs.push("entry with empty id".into());
        }
        if !seen.insert(e.id.as_str()) {
            errs.push(format!("duplicate id {:?}", e.id));
        }
        let mut image_dims = None;
        for (name, p) in e.named_paths() {
            if !p.is_file() {
                errs.push(format!("entry {}: {name} {} does not exist", e.id, p.display()));
                continue;
            }
            match image::image_dimensions(p) {
                Ok(d) => {
                    if name == "paired_he_path" {
                        continue;
                    }
                    match image_dims {
                        None => image_dims = Some(d),
                        Some(ref_d) if ref_d != d => errs.push(format!(
                            "entry {}: {name} is {}x{} but image is {}x{}",
                            e.id, d.0, d.1, ref_d.0, ref_d.1
                        )),
                        _ => {}
                    }
                }
                Err(err) => manifest.warnings.push(format!("entry {}: {name} unreadable: {err}", e.id)),
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(errs))
    }
}
