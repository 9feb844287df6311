use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::segmentation::section_meta;
use super::{ensure_dir, ordered_map, write_json, ArmConfig, Config, DatasetManifest, ManifestEntry, RowStatus, RunOptions};
use crate::adapters::SegmenterRequest;
use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::raster::{self, bbox_prompt, connected_components, invert_grayscale, AnyImage, Connectivity, LabelMap};

/// Where predicted instance maps come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PredSource {
    /// `pred_label_path` of each manifest entry.
    Precomputed,
    /// Segment with an arm; instances are the 8-connected components of its
    /// mask.
    Adapter(ArmConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub id: String,
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub dice: f64,
    pub dq: f64,
    pub sq: f64,
    pub pq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub tool: String,
    pub tool_version: String,
    pub config: Config,
    pub source: String,
    pub rows: Vec<CellRow>,
    pub mean: Option<MeanMetrics>,
    pub excluded: usize,
}

impl CellReport {
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_dir(out_dir)?;
        let json = out_dir.join("report.json");
        write_json(&json, self)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "status", "dice", "dq", "sq", "pq", "tp", "fp", "fn", "error"])?;
        for r in &self.rows {
            let status = if r.status == RowStatus::Ok { "ok" } else { "error" };
            let cols = match r.metrics {
                Some(m) => [m.dice, m.dq, m.sq, m.pq].map(|v| v.to_string()).into_iter().chain([m.tp, m.fp, m.fn_].map(|v| v.to_string())).collect(),
                None => vec![String::new(); 7],
            };
            let mut rec = vec![r.id.clone(), status.to_string()];
            rec.extend(cols);
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        let csv_path = out_dir.join("per_section.csv");
        raster::write_atomic(&csv_path, &w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?)?;
        Ok(vec![json, csv_path])
    }
}

fn predict(entry: &ManifestEntry, gt: &LabelMap, source: &PredSource, config: &Config) -> Result<LabelMap> {
    match source {
        PredSource::Precomputed => {
            let p = entry
                .pred_label_path
                .as_ref()
                .ok_or_else(|| Error::InvalidInput(format!("entry {} has no pred_label_path", entry.id)))?;
            raster::read_label_map(p)
        }
        PredSource::Adapter(arm) => {
            let mut img = raster::read_gray(&entry.image_path)?;
            if config.invert_input {
                img = invert_grayscale(&img);
            }
            let meta = section_meta(entry, config);
            let bbox = bbox_prompt(&gt.binarize(), config.height_factor)?;
            let input = match &arm.domain_transfer {
                Some(dt) => AnyImage::Rgb(dt.run_domain_transfer(&img, &meta)?),
                None => AnyImage::Gray(img),
            };
            let mask = arm.segmenter.run_segmenter(&SegmenterRequest::new(input, bbox)?, &meta)?;
            Ok(connected_components(&mask, Connectivity::Eight))
        }
    }
}

/// Instance-level scoring of cell segmentations: matching at the configured
/// IoU threshold, DQ/SQ/PQ, and Dice on the union of instances.
pub fn evaluate_cells(manifest: &DatasetManifest, source: &PredSource, config: &Config, opts: RunOptions) -> Result<CellReport> {
    config.validate()?;
    if let PredSource::Adapter(arm) = source {
        arm.validate()?;
    }
    let rows = ordered_map(&manifest.entries, opts.workers, |entry| {
        let result = raster::read_label_map(&entry.gt_mask_path).and_then(|gt| {
            let pred = predict(entry, &gt, source, config)?;
            MetricReport::evaluate(&pred, &gt, config.iou_threshold)
        });
        match result {
            Ok(m) => CellRow { id: entry.id.clone(), status: RowStatus::Ok, metrics: Some(m), error: None },
            Err(e) => CellRow { id: entry.id.clone(), status: RowStatus::Error, metrics: None, error: Some(e.to_string()) },
        }
    })?;

    let ok: Vec<MetricReport> = rows.iter().filter_map(|r| r.metrics).collect();
    let mean = (!ok.is_empty()).then(|| {
        let n = ok.len() as f64;
        MeanMetrics {
            dice: ok.iter().map(|m| m.dice).sum::<f64>() / n,
            dq: ok.iter().map(|m| m.dq).sum::<f64>() / n,
            sq: ok.iter().map(|m| m.sq).sum::<f64>() / n,
            pq: ok.iter().map(|m| m.pq).sum::<f64>() / n,
        }
    });
    Ok(CellReport {
        tool: super::TOOL_NAME.into(),
        tool_version: super::TOOL_VERSION.into(),
        config: config.clone(),
        source: match source {
            PredSource::Precomputed => "precomputed".into(),
            PredSource::Adapter(arm) => arm.label.clone(),
        },
        excluded: rows.len() - ok.len(),
        rows,
        mean,
    })
}
