//! Bounding-box prompt, hole filling and closing on a hand-made mask.

use stainshift::raster::{bbox_prompt, binary_closing, fill_holes, BinaryMask, StructuringElement};

fn show(title: &str, m: &BinaryMask) {
    println!("{title}");
    for y in 0..m.height {
        let row: String = (0..m.width).map(|x| if m.get(x, y) { '#' } else { '.' }).collect();
        println!("  {row}");
    }
}

fn main() -> stainshift::Result<()> {
    let rows = [
        "................",
        "..############..",
        "..#####..#####..",
        "..#####..#####..",
        "..############..",
        "..#####.######..",
        "................",
        "................",
    ];
    let mask = BinaryMask::from_fn(16, 8, |x, y| rows[y].as_bytes()[x] == b'#');
    show("raw", &mask);

    let filled = fill_holes(&mask, 100);
    show("holes filled", &filled);
    let closed = binary_closing(&filled, &StructuringElement::square(3));
    show("closed", &closed);

    let bbox = bbox_prompt(&mask, 1.15)?;
    println!("bbox prompt (height factor 1.15): {bbox:?}");
    Ok(())
}
