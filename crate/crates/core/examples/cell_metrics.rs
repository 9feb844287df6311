//! Instance matching and panoptic quality for a cell prediction that misses
//! one cell and splits another.

use stainshift::metrics::{match_instances, panoptic_metrics, MetricReport};
use stainshift::raster::LabelMap;
use stainshift::synth;

fn main() -> stainshift::Result<()> {
    let gt = synth::cell_label_map(96, 96, 10, &mut synth::rng(3));
    let ids = gt.instance_ids();

    // drop the first cell, cut the second in half along its centre column
    let half = gt.instance_mask(ids[1]).bounding_box().expect("cell present");
    let mid = (half.x_min + half.x_max) / 2;
    let labels = (0..gt.labels.len())
        .map(|i| {
            let (x, l) = (i % gt.width, gt.labels[i]);
            match l {
                l if l == ids[0] => 0,
                l if l == ids[1] && x > mid => 1000,
                l => l,
            }
        })
        .collect();
    let pred = LabelMap::new(gt.width, gt.height, labels)?;

    let m = match_instances(&pred, &gt, 0.5)?;
    for p in &m.pairs {
        println!("gt {:>3} <-> pred {:>4}  iou {:.3}", p.gt_id, p.pred_id, p.iou);
    }
    println!("unmatched gt {:?}, unmatched pred {:?}", m.unmatched_gt, m.unmatched_pred);
    let pq = panoptic_metrics(&m)?;
    println!("DQ {:.4}  SQ {:.4}  PQ {:.4}", pq.dq, pq.sq, pq.pq);

    let r = MetricReport::evaluate(&pred, &gt, 0.5)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}
