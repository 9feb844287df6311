//! Two-arm epidermis segmentation comparison on synthetic sections.
//!
//! Arm A is the ground truth eroded by one pixel, a stand-in for a model
//! that systematically under-segments; arm B is an Otsu threshold inside the
//! bbox prompt.
//! Writes `report.json`, `per_section.csv` and `dice_boxplot.svg`.
//!
//!     cargo run --example segmentation_eval -- [out_dir]

use std::path::PathBuf;

use stainshift::adapters::Adapter;
use stainshift::pipeline::{evaluate_segmentation, validate_manifest, ArmConfig, Config, PairedTest, RunOptions};
use stainshift::synth;

fn main() -> stainshift::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "out/segmentation".into()).into();
    let data = tempfile::tempdir().map_err(|e| stainshift::Error::io(std::env::temp_dir(), e))?;
    let manifest = validate_manifest(synth::write_segmentation_fixture(data.path(), 12, 160, 120, 7)?)?;

    let config = Config {
        arm_a: Some(ArmConfig::new("eroded-gt", None, Adapter::ErodeOracle { k: 1 })),
        arm_b: Some(ArmConfig::new("threshold", None, Adapter::Threshold)),
        ..Config::default()
    };
    let report = evaluate_segmentation(&manifest, &config, RunOptions { workers: 4 })?;
    report.write(&out)?;

    for row in &report.rows {
        println!("{:<12} {:?} {:?}", row.id, row.dice_arm_a, row.dice_arm_b);
    }
    if let (Some(a), Some(b)) = (&report.summary_arm_a, &report.summary_arm_b) {
        println!("mean dice {:.4} vs {:.4}", a.mean, b.mean);
    }
    match &report.test {
        PairedTest::Computed { result, .. } => println!("wilcoxon p = {:.3e} ({:?})", result.p_two_sided, result.method),
        other => println!("{other:?}"),
    }
    println!("wrote {}", out.display());
    Ok(())
}
