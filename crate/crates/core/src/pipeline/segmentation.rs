use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ensure_dir, ordered_map, write_json, ArmConfig, Config, DatasetManifest, ManifestEntry, RowStatus, RunOptions};
use crate::adapters::{SectionMeta, SegmenterRequest};
use crate::error::{Error, Result};
use crate::metrics::{dice, summary_stats, SummaryStats};
use crate::raster::{self, apply_signal_mask, bbox_prompt, binary_closing, fill_holes, invert_grayscale, AnyImage, BinaryMask};
use crate::stats::{wilcoxon_signed_rank, PairedSample, TestResult};

/// Fills small holes, then applies the closing.
pub fn postprocess(mask: &BinaryMask, config: &Config) -> BinaryMask {
    binary_closing(&fill_holes(mask, config.hole_max_area), &config.closing_element())
}

pub(crate) struct SectionInputs {
    pub gt: BinaryMask,
    pub dont_care: Option<BinaryMask>,
}

/// Runs one arm on one section: signal masking, optional domain transfer,
/// bbox prompt from the ground truth, segmentation and postprocessing.
pub fn segment_entry(entry: &ManifestEntry, arm: &ArmConfig, config: &Config) -> Result<BinaryMask> {
    let gt = raster::read_mask(&entry.gt_mask_path)?;
    segment_with_gt(entry, &gt, arm, config)
}

fn segment_with_gt(entry: &ManifestEntry, gt: &BinaryMask, arm: &ArmConfig, config: &Config) -> Result<BinaryMask> {
    let mut img = raster::read_gray(&entry.image_path)?;
    gt.ensure_same_dims(img.dims())?;
    if config.invert_input {
        img = invert_grayscale(&img);
    }
    if let Some(p) = &entry.low_signal_mask_path {
        img = apply_signal_mask(&img, &raster::read_mask(p)?)?;
    }
    let meta = section_meta(entry, config);
    let bbox = bbox_prompt(gt, config.height_factor)?;
    let input = match &arm.domain_transfer {
        Some(dt) => AnyImage::Rgb(dt.run_domain_transfer(&img, &meta)?),
        None => AnyImage::Gray(img),
    };
    let mask = arm.segmenter.run_segmenter(&SegmenterRequest::new(input, bbox)?, &meta)?;
    Ok(postprocess(&mask, config))
}

pub(crate) fn section_meta(entry: &ManifestEntry, config: &Config) -> SectionMeta {
    SectionMeta {
        id: entry.id.clone(),
        gt_mask_path: Some(entry.gt_mask_path.clone()),
        paired_he_path: entry.paired_he_path.clone(),
        bbox: None,
        seed: config.seed,
    }
}

fn load_inputs(entry: &ManifestEntry) -> Result<SectionInputs> {
    let gt = raster::read_mask(&entry.gt_mask_path)?;
    let dont_care = entry.dont_care_path.as_ref().map(raster::read_mask).transpose()?;
    Ok(SectionInputs { gt, dont_care })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRow {
    pub id: String,
    pub dice_arm_a: Option<f64>,
    pub dice_arm_b: Option<f64>,
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Outcome of the paired comparison between arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PairedTest {
    Computed { n_pairs: usize, result: TestResult },
    /// Every paired difference was zero.
    NoDifference { n_pairs: usize },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub tool: String,
    pub tool_version: String,
    pub config: Config,
    pub arm_a: String,
    pub arm_b: String,
    pub rows: Vec<SectionRow>,
    pub summary_arm_a: Option<SummaryStats>,
    pub summary_arm_b: Option<SummaryStats>,
    /// Sections left out of the aggregates because an arm failed.
    pub excluded: usize,
    pub test: PairedTest,
}

impl EvaluationReport {
    pub fn ok_rows(&self) -> impl Iterator<Item = &SectionRow> {
        self.rows.iter().filter(|r| r.status == RowStatus::Ok)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut b = serde_json::to_vec_pretty(self)?;
        b.push(b'\n');
        Ok(b)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "dice_arm_a", "dice_arm_b", "status", "error"])?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let status = if r.status == RowStatus::Ok { "ok" } else { "error" };
            w.write_record([r.id.as_str(), &fmt(r.dice_arm_a), &fmt(r.dice_arm_b), status, r.error.as_deref().unwrap_or("")])?;
        }
        w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// Writes `report.json`, `per_section.csv` and `dice_boxplot.svg`.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_dir(out_dir)?;
        let json = out_dir.join("report.json");
        write_json(&json, self)?;
        let csv_path = out_dir.join("per_section.csv");
        raster::write_atomic(&csv_path, &self.to_csv()?)?;
        let mut written = vec![json, csv_path];
        let groups: Vec<super::BoxGroup> = [(&self.arm_a, true), (&self.arm_b, false)]
            .into_iter()
            .map(|(label, a)| super::BoxGroup {
                name: label.clone(),
                values: self.ok_rows().filter_map(|r| if a { r.dice_arm_a } else { r.dice_arm_b }).collect(),
            })
            .collect();
        if groups.iter().all(|g| !g.values.is_empty()) {
            let svg = out_dir.join("dice_boxplot.svg");
            raster::write_atomic(&svg, super::emit_boxplot(&groups)?.as_bytes())?;
            written.push(svg);
        }
        Ok(written)
    }
}

/// Scores both arms on every section and compares them with the Wilcoxon
/// signed-rank test over sections where both succeeded.
pub fn evaluate_segmentation(manifest: &DatasetManifest, config: &Config, opts: RunOptions) -> Result<EvaluationReport> {
    config.validate()?;
    let arm_a = config.arm_a.as_ref().ok_or_else(|| Error::InvalidInput("config has no arm_a".into()))?;
    let arm_b = config.arm_b.as_ref().ok_or_else(|| Error::InvalidInput("config has no arm_b".into()))?;

    let rows = ordered_map(&manifest.entries, opts.workers, |entry| {
        let score = |arm: &ArmConfig, inputs: &SectionInputs| -> Result<f64> {
            let mask = segment_with_gt(entry, &inputs.gt, arm, config)?;
            dice(&mask, &inputs.gt, inputs.dont_care.as_ref())
        };
        let (a, b) = match load_inputs(entry) {
            Ok(inputs) => (score(arm_a, &inputs), score(arm_b, &inputs)),
            Err(e) => {
                let msg = e.to_string();
                (Err(Error::InvalidInput(msg.clone())), Err(Error::InvalidInput(msg)))
            }
        };
        let mut errors = Vec::new();
        if let Err(e) = &a {
            errors.push(format!("{}: {e}", arm_a.label));
        }
        if let Err(e) = &b {
            errors.push(format!("{}: {e}", arm_b.label));
        }
        SectionRow {
            id: entry.id.clone(),
            dice_arm_a: a.ok(),
            dice_arm_b: b.ok(),
            status: if errors.is_empty() { RowStatus::Ok } else { RowStatus::Error },
            error: (!errors.is_empty()).then(|| errors.join("; ")),
        }
    })?;

    let ok: Vec<&SectionRow> = rows.iter().filter(|r| r.status == RowStatus::Ok).collect();
    let a: Vec<f64> = ok.iter().map(|r| r.dice_arm_a.expect("ok row")).collect();
    let b: Vec<f64> = ok.iter().map(|r| r.dice_arm_b.expect("ok row")).collect();
    let summary_a = summary_stats(&a, config.std_mode).ok();
    let summary_b = summary_stats(&b, config.std_mode).ok();

    let test = if a.is_empty() {
        PairedTest::Skipped { reason: "no section succeeded in both arms".into() }
    } else {
        match wilcoxon_signed_rank(&PairedSample::new(a.clone(), b.clone())?, config.wilcoxon) {
            Ok(result) => PairedTest::Computed { n_pairs: a.len(), result },
            Err(Error::DegenerateSample(_)) => PairedTest::NoDifference { n_pairs: a.len() },
            Err(e) => return Err(e),
        }
    };

    Ok(EvaluationReport {
        tool: super::TOOL_NAME.into(),
        tool_version: super::TOOL_VERSION.into(),
        config: config.clone(),
        arm_a: arm_a.label.clone(),
        arm_b: arm_b.label.clone(),
        excluded: rows.len() - ok.len(),
        rows,
        summary_arm_a: summary_a,
        summary_arm_b: summary_b,
        test,
    })
}
