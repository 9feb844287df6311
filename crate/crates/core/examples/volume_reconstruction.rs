//! Stacks per-slice masks of a cylinder phantom, smooths with a 3-D Gaussian
//! and thresholds. Writes the volumes and a PNG stack.
//!
//!     cargo run --example volume_reconstruction -- [out_dir]

use std::path::PathBuf;

use stainshift::adapters::Adapter;
use stainshift::pipeline::{reconstruct_volume, validate_manifest, ArmConfig, Config, RunOptions};
use stainshift::synth;

fn main() -> stainshift::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "out/volume".into()).into();
    let data = tempfile::tempdir().map_err(|e| stainshift::Error::io(std::env::temp_dir(), e))?;
    let slices = synth::cylinder_phantom(32, 64, 20, 32.0, 9.5, 12.0);
    let manifest = validate_manifest(synth::write_volume_fixture(data.path(), &slices)?)?;

    // 10 um sections, 2 um pixels, sigma 6 um in plane and across slices
    let config = Config { sigma3d_um: Some(6.0), pixel_spacing_um: 2.0, slice_spacing_um: 10.0, ..Config::default() };
    let arm = ArmConfig::new("oracle", None, Adapter::Oracle);
    let report = reconstruct_volume(&manifest, &arm, &config, RunOptions { workers: 4 })?;
    report.write(&out)?;
    println!(
        "{:?} voxels, sigma {:?}, foreground {} -> {}",
        report.dims, report.sigma, report.foreground_voxels_stacked, report.foreground_voxels_final
    );
    println!("wrote {}", out.display());
    Ok(())
}
