//! Renders a box plot (median, quartile box, min-max whiskers) to SVG.

use stainshift::pipeline::{emit_boxplot, BoxGroup};

fn main() -> stainshift::Result<()> {
    let groups = vec![
        BoxGroup { name: "grey".into(), values: vec![0.52, 0.61, 0.66, 0.70, 0.58, 0.73, 0.49] },
        BoxGroup { name: "pseudo-stain".into(), values: vec![0.74, 0.80, 0.83, 0.79, 0.77, 0.86, 0.71] },
    ];
    let svg = emit_boxplot(&groups)?;
    let path = std::env::args().nth(1).unwrap_or_else(|| "boxplot.svg".into());
    stainshift::raster::write_atomic(&path, svg.as_bytes())?;
    println!("wrote {path}");
    Ok(())
}
