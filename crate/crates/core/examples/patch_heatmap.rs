//! Query-patch retrieval over a two-texture image: tiles, embeds, maps cosine
//! similarity to the query and scores the map against an annotation.
//!
//!     cargo run --example patch_heatmap -- [out_dir]

use std::path::PathBuf;

use stainshift::adapters::Adapter;
use stainshift::pipeline::{patch_classify, Config, PatchImage, PatchRequest};
use stainshift::raster::BinaryMask;
use stainshift::synth;

fn main() -> stainshift::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "out/patch".into()).into();
    let image = synth::two_texture_image(1024, 512, 384, &mut synth::rng(9));
    let annotation = BinaryMask::from_fn(1024, 512, |x, _| x < 384);

    let config = Config { window: 128, stride: 64, patch_threshold: 0.6, ..Config::default() };
    let req = PatchRequest {
        image: PatchImage::Rgb(image),
        query_xy: (64, 192),
        embedder: &Adapter::Histogram,
        domain_transfer: None,
        annotation: Some(annotation),
    };
    let result = patch_classify(&req, &config)?;
    result.write(&out)?;
    println!("{} patches, similarity range [{:.3}, {:.3}]", result.patches, result.min_score, result.max_score);
    if let Some(s) = &result.score {
        println!("patch F1 {:.3} (precision {:.3}, recall {:.3})", s.f1, s.precision, s.recall);
    }
    println!("wrote {}", out.display());
    Ok(())
}
