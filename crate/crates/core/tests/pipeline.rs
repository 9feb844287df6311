use std::path::Path;

use stainshift::adapters::Adapter;
use stainshift::metrics::dice;
use stainshift::pipeline::{
    evaluate_cells, evaluate_domain_distance, evaluate_segmentation, patch_classify, reconstruct_volume,
    validate_manifest, ArmConfig, Config, DatasetManifest, ManifestEntry, PairedTest, PatchImage, PatchRequest,
    PredSource, RowStatus, RunOptions,
};
use stainshift::raster::{self, BinaryMask, ImageGray, LabelMap};
use stainshift::{synth, Error};

fn two_arm_config(b: Adapter) -> Config {
    Config {
        arm_a: Some(ArmConfig::new("oracle", None, Adapter::Oracle)),
        arm_b: Some(ArmConfig::new("other", None, b)),
        ..Config::default()
    }
}

#[test]
fn oracle_scores_one_and_erosion_hurts() {
    let dir = tempfile::tempdir().unwrap();
    let m = validate_manifest(synth::write_segmentation_fixture(dir.path(), 6, 96, 80, 11).unwrap()).unwrap();
    let r = evaluate_segmentation(&m, &two_arm_config(Adapter::ErodeOracle { k: 2 }), RunOptions::default()).unwrap();
    assert_eq!(r.excluded, 0);
    for row in &r.rows {
        assert_eq!(row.dice_arm_a, Some(1.0));
        assert!(row.dice_arm_b.unwrap() < 1.0);
    }
    match r.test {
        PairedTest::Computed { n_pairs, result } => {
            assert_eq!(n_pairs, 6);
            assert!((result.p_two_sided - 0.03125).abs() < 1e-12);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn identical_arms_report_no_difference() {
    let dir = tempfile::tempdir().unwrap();
    let m = validate_manifest(synth::write_segmentation_fixture(dir.path(), 3, 64, 64, 1).unwrap()).unwrap();
    let r = evaluate_segmentation(&m, &two_arm_config(Adapter::Oracle), RunOptions::default()).unwrap();
    assert!(matches!(r.test, PairedTest::NoDifference { n_pairs: 3 }));
}

#[test]
fn threshold_segmenter_finds_the_band() {
    let dir = tempfile::tempdir().unwrap();
    let m = validate_manifest(synth::write_segmentation_fixture(dir.path(), 4, 96, 80, 5).unwrap()).unwrap();
    let r = evaluate_segmentation(&m, &two_arm_config(Adapter::Threshold), RunOptions::default()).unwrap();
    for row in &r.rows {
        assert!(row.dice_arm_b.unwrap() > 0.6, "{row:?}");
    }
}

#[test]
fn unreadable_image_becomes_error_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth::write_segmentation_fixture(dir.path(), 4, 64, 64, 2).unwrap();
    std::fs::write(dir.path().join("section_002_image.png"), b"not a png").unwrap();
    let m = validate_manifest(&path).unwrap();
    assert_eq!(m.warnings.len(), 1);
    let r = evaluate_segmentation(&m, &two_arm_config(Adapter::ErodeOracle { k: 1 }), RunOptions::default()).unwrap();
    assert_eq!(r.excluded, 1);
    assert_eq!(r.rows[2].status, RowStatus::Error);
    assert!(r.rows[2].error.is_some());
    assert_eq!(r.rows.iter().filter(|row| row.status == RowStatus::Ok).count(), 3);
    assert_eq!(r.summary_arm_a.unwrap().mean, 1.0);

    let out = dir.path().join("out");
    r.write(&out).unwrap();
    let csv = std::fs::read_to_string(out.join("per_section.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(out.join("dice_boxplot.svg").exists());
}

#[test]
fn manifest_problems_are_collected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    raster::write_gray(d.join("a.png"), &ImageGray::filled(10, 10, 5)).unwrap();
    raster::write_mask(d.join("small.png"), &BinaryMask::full(8, 8)).unwrap();
    let entries = vec![
        ManifestEntry::new("x", "a.png", "small.png"),
        ManifestEntry::new("x", "a.png", "missing.png"),
        ManifestEntry::new("", "a.png", "small.png"),
    ];
    let path = d.join("manifest.json");
    DatasetManifest::new(entries).write(&path).unwrap();
    match validate_manifest(&path) {
        Err(Error::Validation(problems)) => {
            let all = problems.join("\n");
            assert!(problems.len() >= 4, "{all}");
            assert!(all.contains("duplicate"), "{all}");
            assert!(all.contains("missing.png"), "{all}");
            assert!(all.contains("8x8") || all.contains("8×8") || all.contains("dimension"), "{all}");
        }
        other => panic!("expected validation error, got {other:?}"),
    }
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let m = validate_manifest(synth::write_segmentation_fixture(dir.path(), 8, 64, 64, 9).unwrap()).unwrap();
    let cfg = two_arm_config(Adapter::Threshold);
    let one = evaluate_segmentation(&m, &cfg, RunOptions { workers: 1 }).unwrap().to_json().unwrap();
    let four = evaluate_segmentation(&m, &cfg, RunOptions { workers: 4 }).unwrap().to_json().unwrap();
    assert_eq!(one, four);
}

fn drop_last_instance(gt: &LabelMap) -> LabelMap {
    let last = *gt.instance_ids().last().unwrap();
    let labels = gt.labels.iter().map(|&l| if l == last { 0 } else { l }).collect();
    LabelMap { labels, ..gt.clone() }
}

#[test]
fn cells_with_one_missed_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth::write_cell_fixture(dir.path(), 3, 10, 4, Some(&drop_last_instance)).unwrap();
    let m = validate_manifest(path).unwrap();
    let r = evaluate_cells(&m, &PredSource::Precomputed, &Config::default(), RunOptions::default()).unwrap();
    for row in &r.rows {
        let mr = row.metrics.unwrap();
        assert_eq!((mr.tp, mr.fp, mr.fn_), (9, 0, 1));
        assert!((mr.dq - 9.0 / 9.5).abs() < 1e-12);
        assert_eq!(mr.sq, 1.0);
        assert!((mr.pq - mr.dq * mr.sq).abs() < 1e-12);
    }
    r.write(&dir.path().join("out")).unwrap();
}

#[test]
fn cells_through_oracle_adapter_are_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let m = validate_manifest(synth::write_cell_fixture(dir.path(), 2, 8, 7, None).unwrap()).unwrap();
    let source = PredSource::Adapter(ArmConfig::new("oracle", None, Adapter::Oracle));
    let r = evaluate_cells(&m, &source, &Config::default(), RunOptions::default()).unwrap();
    let mean = r.mean.unwrap();
    assert_eq!((mean.dice, mean.dq, mean.sq, mean.pq), (1.0, 1.0, 1.0, 1.0));
    // precomputed route without predictions marks every row as failed
    let r = evaluate_cells(&m, &PredSource::Precomputed, &Config::default(), RunOptions::default()).unwrap();
    assert_eq!(r.excluded, 2);
    assert!(r.mean.is_none());
}

#[test]
fn domain_transfer_moves_embeddings_towards_he() {
    let dir = tempfile::tempdir().unwrap();
    let m = validate_manifest(synth::write_domain_fixture(dir.path(), 30, 32, 3).unwrap()).unwrap();
    let cfg = Config::default();
    let r = evaluate_domain_distance(&m, &Adapter::Histogram, Some(&Adapter::PseudoStain), &cfg).unwrap();
    assert!(r.kl_transferred_he.unwrap() < r.kl_raw_he, "{r:?}");
    assert!(r.reduction.unwrap() > 0.0);

    let same = evaluate_domain_distance(&m, &Adapter::Histogram, Some(&Adapter::PairedHe), &cfg).unwrap();
    let t = same.kl_transferred_he.unwrap();
    assert!((t - (30.0f64 / 29.0).ln()).abs() < 1e-9 && t.abs() < 0.05, "{t}");
    same.write(&dir.path().join("out")).unwrap();
}

#[test]
fn domain_distance_requires_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let m = validate_manifest(synth::write_segmentation_fixture(dir.path(), 8, 32, 32, 0).unwrap()).unwrap();
    let err = evaluate_domain_distance(&m, &Adapter::Histogram, None, &Config::default()).unwrap_err();
    assert!(matches!(err, Error::Validation(_)));
}

fn phantom(dir: &Path) -> (DatasetManifest, Vec<BinaryMask>) {
    let slices = synth::cylinder_phantom(16, 48, 16, 24.0, 8.0, 9.0);
    let m = validate_manifest(synth::write_volume_fixture(dir, &slices).unwrap()).unwrap();
    (m, slices)
}

#[test]
fn volume_phantom_is_preserved_away_from_the_surface() {
    let dir = tempfile::tempdir().unwrap();
    let (m, slices) = phantom(dir.path());
    let cfg = Config { sigma3d: 2.0, ..Config::default() };
    let arm = ArmConfig::new("oracle", None, Adapter::Oracle);
    let r = reconstruct_volume(&m, &arm, &cfg, RunOptions::default()).unwrap();
    let stacked = r.stacked.as_ref().unwrap();
    let out = r.binary.as_ref().unwrap();
    assert_eq!(stacked.dims(), (16, 48, 16));
    for (z, s) in slices.iter().enumerate() {
        assert_eq!(stacked.slice_mask(z), *s);
    }
    let radius = 6isize;
    let (w, h, d) = stacked.dims();
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut checked = 0;
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                let v = stacked.get(x, y, z);
                let uniform = (-radius..=radius).all(|dz| {
                    (-radius..=radius).all(|dy| {
                        (-radius..=radius).all(|dx| {
                            stacked.get(
                                clamp(x as isize + dx, w),
                                clamp(y as isize + dy, h),
                                clamp(z as isize + dz, d),
                            ) == v
                        })
                    })
                });
                if uniform {
                    checked += 1;
                    assert_eq!(out.get(x, y, z), v, "voxel ({x}, {y}, {z})");
                }
            }
        }
    }
    assert!(checked > 1000);
    let before: usize = slices.iter().map(BinaryMask::count).sum();
    let after = r.foreground_voxels_final;
    assert!((after as f64 - before as f64).abs() / (before as f64) < 0.2, "{before} vs {after}");

    let files = r.write(&dir.path().join("out")).unwrap();
    assert!(files.iter().all(|f| f.exists()));
}

#[test]
fn volume_fails_on_empty_slice() {
    let dir = tempfile::tempdir().unwrap();
    let mut slices = synth::cylinder_phantom(8, 24, 4, 12.0, 1.5, 3.0);
    slices.push(BinaryMask::empty(8, 24));
    let m = validate_manifest(synth::write_volume_fixture(dir.path(), &slices).unwrap()).unwrap();
    let arm = ArmConfig::new("oracle", None, Adapter::Oracle);
    let err = reconstruct_volume(&m, &arm, &Config::default(), RunOptions::default()).unwrap_err();
    assert!(err.to_string().contains("slice_0004"), "{err}");
}

#[test]
fn patch_map_separates_textures() {
    let img = synth::two_texture_image(512, 256, 256, &mut synth::rng(4));
    let annotation = BinaryMask::from_fn(512, 256, |x, _| x < 256);
    let cfg = Config { window: 64, stride: 64, patch_threshold: 0.6, ..Config::default() };
    let req = PatchRequest {
        image: PatchImage::Rgb(img.clone()),
        query_xy: (0, 0),
        embedder: &Adapter::Histogram,
        domain_transfer: None,
        annotation: Some(annotation.clone()),
    };
    let r = patch_classify(&req, &cfg).unwrap();
    assert_eq!(r.patches, 32);
    assert_eq!(r.score.unwrap().f1, 1.0);
    assert!(r.max_score > 0.9 && r.min_score < 0.1);

    let overlapping = Config { stride: 32, ..cfg };
    let r = patch_classify(&req, &overlapping).unwrap();
    assert_eq!(r.patches, 15 * 7);
    assert!(r.map.pixels.iter().all(|v| (-1e-9..=1.0 + 1e-9).contains(v)));
    let dir = tempfile::tempdir().unwrap();
    let files = r.write(dir.path()).unwrap();
    let heat = raster::read_rgb(&files[0]).unwrap();
    assert_eq!(heat.dims(), (512, 256));
    // similar (left) renders red, dissimilar (right) green
    assert!(heat.get(10, 10)[0] > heat.get(10, 10)[1]);
    assert!(heat.get(500, 10)[1] > heat.get(500, 10)[0]);
}

#[test]
fn patch_query_outside_image_is_rejected() {
    let img = synth::two_texture_image(128, 64, 64, &mut synth::rng(0));
    let cfg = Config { window: 64, stride: 32, ..Config::default() };
    let req = PatchRequest {
        image: PatchImage::Rgb(img),
        query_xy: (100, 0),
        embedder: &Adapter::Histogram,
        domain_transfer: None,
        annotation: None,
    };
    assert!(matches!(patch_classify(&req, &cfg), Err(Error::InvalidGeometry(_))));
}

#[test]
fn postprocess_is_applied_to_segmenter_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth::write_segmentation_fixture(dir.path(), 1, 64, 64, 0).unwrap();
    let m = validate_manifest(path).unwrap();
    let e = &m.entries[0];
    let arm = ArmConfig::new("t", None, Adapter::Threshold);
    let mask = stainshift::pipeline::segment_entry(e, &arm, &Config::default()).unwrap();
    let again = stainshift::pipeline::postprocess(&mask, &Config::default());
    assert_eq!(mask, again);
    let gt = raster::read_mask(&e.gt_mask_path).unwrap();
    assert!(dice(&mask, &gt, None).unwrap() > 0.5);
}
