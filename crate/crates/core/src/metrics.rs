//! Segmentation, instance, retrieval and summary metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, DontCareMask, LabelMap};

/// Dice similarity `2|P∩A| / (|P|+|A|)`.
///
/// Pixels under `dont_care` are removed from both sets before counting.
pub fn dice(pred: &BinaryMask, gt: &BinaryMask, dont_care: Option<&DontCareMask>) -> Result<f64> {
    pred.ensure_same_dims(gt.dims())?;
    if let Some(dc) = dont_care {
        dc.ensure_same_dims(gt.dims())?;
    }
    let (mut inter, mut p, mut a) = (0usize, 0usize, 0usize);
    for i in 0..gt.bits.len() {
        if dont_care.is_some_and(|dc| dc.bits[i]) {
            continue;
        }
        let (pi, ai) = (pred.bits[i], gt.bits[i]);
        p += pi as usize;
        a += ai as usize;
        inter += (pi && ai) as usize;
    }
    if p + a == 0 {
        return Err(Error::UndefinedMetric("dice of two empty masks".into()));
    }
    Ok(2.0 * inter as f64 / (p + a) as f64)
}

/// Intersection over union of two pixel sets.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.ensure_same_dims(b.dims())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        return Err(Error::UndefinedMetric("IoU of two empty sets".into()));
    }
    Ok(inter as f64 / union as f64)
}

/// One true-positive pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub gt_id: u32,
    pub pred_id: u32,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstanceMatching {
    /// Sorted by `gt_id`.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_gt: Vec<u32>,
    pub unmatched_pred: Vec<u32>,
}

/// Pairs every gt/pred instance whose IoU exceeds `threshold`.
///
/// With `threshold >= 0.5` an instance can overlap at most one partner by
/// more than half of their union, so the pairing is unique without any
/// assignment step.
pub fn match_instances(pred: &LabelMap, gt: &LabelMap, threshold: f64) -> Result<InstanceMatching> {
    if !(threshold >= 0.5) {
        return Err(Error::InvalidThreshold(threshold));
    }
    if pred.dims() != gt.dims() {
        return Err(Error::dims(gt.dims(), pred.dims()));
    }

    let mut gt_area: BTreeMap<u32, usize> = BTreeMap::new();
    let mut pred_area: BTreeMap<u32, usize> = BTreeMap::new();
    let mut overlap: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (&g, &p) in gt.labels.iter().zip(&pred.labels) {
        if g != 0 {
            *gt_area.entry(g).or_default() += 1;
        }
        if p != 0 {
            *pred_area.entry(p).or_default() += 1;
        }
        if g != 0 && p != 0 {
            *overlap.entry((g, p)).or_default() += 1;
        }
    }

    let mut pairs = Vec::new();
    for (&(g, p), &inter) in &overlap {
        let union = gt_area[&g] + pred_area[&p] - inter;
        let iou = inter as f64 / union as f64;
        if iou > threshold {
            pairs.push(MatchedPair { gt_id: g, pred_id: p, iou });
        }
    }
    let unmatched_gt = gt_area.keys().copied().filter(|g| !pairs.iter().any(|m| m.gt_id == *g)).collect();
    let unmatched_pred = pred_area.keys().copied().filter(|p| !pairs.iter().any(|m| m.pred_id == *p)).collect();
    Ok(InstanceMatching { pairs, unmatched_gt, unmatched_pred })
}

/// Detection, segmentation and panoptic quality of a matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanopticQuality {
    pub dq: f64,
    pub sq: f64,
    pub pq: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// `dq = TP / (TP + FP/2 + FN/2)`, `sq` = mean matched IoU (0 without
/// matches), `pq = dq * sq`.
pub fn panoptic_metrics(m: &InstanceMatching) -> Result<PanopticQuality> {
    let tp = m.pairs.len();
    let fp = m.unmatched_pred.len();
    let fn_ = m.unmatched_gt.len();
    if tp + fp + fn_ == 0 {
        return Err(Error::UndefinedMetric("no instances in gt or prediction".into()));
    }
    let dq = tp as f64 / (tp as f64 + 0.5 * fp as f64 + 0.5 * fn_ as f64);
    let sq = if tp == 0 { 0.0 } else { m.pairs.iter().map(|p| p.iou).sum::<f64>() / tp as f64 };
    Ok(PanopticQuality { dq, sq, pq: dq * sq, tp, fp, fn_ })
}

/// Per-image cell segmentation scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dice: f64,
    pub dq: f64,
    pub sq: f64,
    pub pq: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MetricReport {
    /// Full instance evaluation: matching at `threshold`, panoptic quality,
    /// and Dice on the binarised union of instances.
    pub fn evaluate(pred: &LabelMap, gt: &LabelMap, threshold: f64) -> Result<Self> {
        let pq = panoptic_metrics(&match_instances(pred, gt, threshold)?)?;
        let dice = dice(&pred.binarize(), &gt.binarize(), None)?;
        Ok(Self { dice, dq: pq.dq, sq: pq.sq, pq: pq.pq, tp: pq.tp, fp: pq.fp, fn_: pq.fn_ })
    }
}

/// How a single retrieval query is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallMode {
    /// 1 if any retrieved label is correct.
    #[default]
    Any,
    /// Fraction of the k slots holding the correct label.
    Fraction,
}

/// Mean per-query recall over the top-`k` retrieved labels.
pub fn recall_at_k<T: PartialEq>(results: &[Vec<T>], correct: &[T], k: usize, mode: RecallMode) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::UndefinedMetric("recall@k over zero queries".into()));
    }
    if results.len() != correct.len() {
        return Err(Error::InvalidInput(format!(
            "{} result lists but {} correct labels",
            results.len(),
            correct.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    let mut total = 0.0;
    for (i, (list, truth)) in results.iter().zip(correct).enumerate() {
        if list.len() > k {
            return Err(Error::InvalidInput(format!("query {i} has {} results, more than k={k}", list.len())));
        }
        let hits = list.iter().filter(|l| *l == truth).count();
        total += match mode {
            RecallMode::Any => (hits > 0) as u8 as f64,
            RecallMode::Fraction => hits as f64 / k as f64,
        };
    }
    Ok(total / results.len() as f64)
}

/// Binary confusion counts with the usual derived rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_masks(pred: &BinaryMask, gt: &BinaryMask) -> Result<Self> {
        pred.ensure_same_dims(gt.dims())?;
        Ok(Self::from_pairs(pred.bits.iter().copied().zip(gt.bits.iter().copied())))
    }

    pub fn from_pairs(items: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Confusion::default();
        for (p, g) in items {
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn f1(&self) -> Result<f64> {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            return Err(Error::UndefinedMetric("F1 with no positives in prediction or truth".into()));
        }
        Ok(2.0 * self.tp as f64 / denom as f64)
    }

    /// 0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio_or_zero(self.tp, self.tp + self.fp)
    }

    /// 0 when nothing is truly positive.
    pub fn recall(&self) -> f64 {
        ratio_or_zero(self.tp, self.tp + self.fn_)
    }
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `2TP / (2TP + FP + FN)` over mask pixels.
pub fn f1_binary(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    Confusion::from_masks(pred, gt)?.f1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdMode {
    /// Divides by n-1.
    #[default]
    Sample,
    /// Divides by n.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub p25: f64,
    pub p75: f64,
}

/// Mean, spread and quartiles. Percentiles interpolate linearly between
/// order statistics at rank `q * (n - 1)`.
pub fn summary_stats(values: &[f64], std_mode: StdMode) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::UndefinedMetric("summary of an empty list".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("summary of non-finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let std = match (std_mode, n) {
        (_, 1) => 0.0,
        (StdMode::Sample, _) => (ss / (n - 1) as f64).sqrt(),
        (StdMode::Population, _) => (ss / n as f64).sqrt(),
    };
    Ok(SummaryStats {
        mean,
        median: percentile_sorted(&sorted, 0.5),
        std,
        min: sorted[0],
        max: sorted[n - 1],
        p25: percentile_sorted(&sorted, 0.25),
        p75: percentile_sorted(&sorted, 0.75),
    })
}

pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(rows: &[&str]) -> BinaryMask {
        BinaryMask::from_fn(rows[0].len(), rows.len(), |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn dice_basic_cases() {
        let p = grid(&["##..", "##..", "....", "...."]);
        assert_eq!(dice(&p, &p, None).unwrap(), 1.0);
        let q = grid(&["....", "....", "..##", "..##"]);
        assert_eq!(dice(&p, &q, None).unwrap(), 0.0);
        assert!(matches!(
            dice(&BinaryMask::empty(4, 4), &BinaryMask::empty(4, 4), None),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn dice_six_four_three() {
        // |P| = 6, |A| = 4, |P∩A| = 3 on an 8x8 grid.
        let p = grid(&[
            "........", ".###....", ".###....", "........", "........", "........", "........", "........",
        ]);
        let a = grid(&[
            "........", "..##....", "...#....", "...#....", "........", "........", "........", "........",
        ]);
        assert_eq!((p.count(), a.count()), (6, 4));
        let inter = p.bits.iter().zip(&a.bits).filter(|(x, y)| **x && **y).count();
        assert_eq!(inter, 3);
        assert!((dice(&p, &a, None).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn dont_care_hides_all_disagreement() {
        let p = grid(&["###.", "###.", "#...", "...."]);
        let a = grid(&["##..", "###.", "....", "..#."]);
        let dc = grid(&["..#.", "....", "#...", "..#."]);
        assert!(dice(&p, &a, None).unwrap() < 1.0);
        assert_eq!(dice(&p, &a, Some(&dc)).unwrap(), 1.0);
    }

    #[test]
    fn iou_cases() {
        let a = grid(&["##..", "##.."]);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &grid(&["..##", "..##"])).unwrap(), 0.0);
        let b = grid(&[".##.", ".##."]);
        assert!((iou(&a, &b).unwrap() - 2.0 / 6.0).abs() < 1e-15);
        assert!(iou(&BinaryMask::empty(2, 2), &BinaryMask::empty(2, 2)).is_err());
    }

    fn labels(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> LabelMap {
        let mut v = Vec::new();
        for y in 0..h {
            for x in 0..w {
                v.push(f(x, y));
            }
        }
        LabelMap::new(w, h, v).unwrap()
    }

    #[test]
    fn relabelled_prediction_matches_perfectly() {
        let gt = labels(8, 8, |x, y| if y < 4 { 1 + (x / 4) as u32 } else { 0 });
        let pred = labels(8, 8, |x, y| if y < 4 { 10 - (x / 4) as u32 } else { 0 });
        let m = match_instances(&pred, &gt, 0.5).unwrap();
        assert_eq!(m.pairs.len(), 2);
        assert!(m.pairs.iter().all(|p| p.iou == 1.0));
        assert!(m.unmatched_gt.is_empty() && m.unmatched_pred.is_empty());
        let q = panoptic_metrics(&m).unwrap();
        assert_eq!((q.dq, q.sq, q.pq), (1.0, 1.0, 1.0));
    }

    #[test]
    fn empty_prediction_leaves_all_gt_unmatched() {
        let gt = labels(9, 3, |x, _| 1 + (x / 3) as u32);
        let m = match_instances(&LabelMap::zeros(9, 3), &gt, 0.5).unwrap();
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_gt, vec![1, 2, 3]);
        let q = panoptic_metrics(&m).unwrap();
        assert_eq!((q.dq, q.sq, q.pq), (0.0, 0.0, 0.0));
    }

    #[test]
    fn mixed_matching_on_32x32() {
        // g1: 100 px, p1 covers its top 60 -> IoU 0.6
        // g2: 100 px, p2 covers its top 40 -> IoU 0.4
        let gt = labels(32, 32, |x, y| match (x, y) {
            (0..=9, 0..=9) => 1,
            (20..=29, 20..=29) => 2,
            _ => 0,
        });
        let pred = labels(32, 32, |x, y| match (x, y) {
            (0..=9, 0..=5) => 7,
            (20..=29, 20..=23) => 9,
            _ => 0,
        });
        let m = match_instances(&pred, &gt, 0.5).unwrap();
        assert_eq!(m.pairs, vec![MatchedPair { gt_id: 1, pred_id: 7, iou: 0.6 }]);
        assert_eq!(m.unmatched_gt, vec![2]);
        assert_eq!(m.unmatched_pred, vec![9]);
        let q = panoptic_metrics(&m).unwrap();
        assert!((q.dq - 0.5).abs() < 1e-15);
        assert!((q.sq - 0.6).abs() < 1e-15);
        assert!((q.pq - 0.3).abs() < 1e-15);
    }

    #[test]
    fn low_threshold_rejected_and_nothing_undefined() {
        let z = LabelMap::zeros(3, 3);
        assert!(matches!(match_instances(&z, &z, 0.4), Err(Error::InvalidThreshold(_))));
        let m = match_instances(&z, &z, 0.5).unwrap();
        assert!(matches!(panoptic_metrics(&m), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn recall_examples() {
        let res = vec![vec!["a", "b"], vec!["c", "d"], vec!["x", "a"]];
        assert_eq!(recall_at_k(&res, &["a", "a", "a"], 5, RecallMode::Any).unwrap(), 2.0 / 3.0);
        assert_eq!(recall_at_k(&res, &["q", "q", "q"], 5, RecallMode::Any).unwrap(), 0.0);
        assert_eq!(recall_at_k(&res, &["a", "c", "a"], 2, RecallMode::Any).unwrap(), 1.0);
        let frac = recall_at_k(&[vec![1, 1, 2, 1, 3]], &[1], 5, RecallMode::Fraction).unwrap();
        assert!((frac - 0.6).abs() < 1e-15);
        assert!(recall_at_k::<u8>(&[], &[], 5, RecallMode::Any).is_err());
        assert!(recall_at_k(&[vec![1, 2, 3]], &[1], 2, RecallMode::Any).is_err());
    }

    #[test]
    fn f1_examples() {
        let g = grid(&["##..", "##.."]);
        assert_eq!(f1_binary(&g, &g).unwrap(), 1.0);
        assert_eq!(f1_binary(&g, &grid(&["..##", "..##"])).unwrap(), 0.0);
        let c = Confusion { tp: 3, fp: 1, fn_: 1, tn: 5 };
        assert_eq!(c.f1().unwrap(), 0.75);
        assert!(f1_binary(&BinaryMask::empty(2, 2), &BinaryMask::empty(2, 2)).is_err());
    }

    #[test]
    fn summary_examples() {
        let s = summary_stats(&[0.5; 10], StdMode::Sample).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max, s.p25, s.p75, s.std), (0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.0));
        let s = summary_stats(&[5.0, 3.0, 1.0, 4.0, 2.0], StdMode::Sample).unwrap();
        assert_eq!((s.mean, s.median, s.p25, s.p75, s.min, s.max), (3.0, 3.0, 2.0, 4.0, 1.0, 5.0));
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-15);
        let p = summary_stats(&[1.0, 2.0, 3.0, 4.0, 5.0], StdMode::Population).unwrap();
        assert!((p.std - 2f64.sqrt()).abs() < 1e-15);
        let one = summary_stats(&[0.42], StdMode::Sample).unwrap();
        assert_eq!((one.mean, one.median, one.std, one.p25, one.p75), (0.42, 0.42, 0.0, 0.42, 0.42));
        assert!(summary_stats(&[], StdMode::Sample).is_err());
        // rank 0.25 * 3 = 0.75 between 10 and 20
        let q = summary_stats(&[10.0, 20.0, 30.0, 40.0], StdMode::Sample).unwrap();
        assert_eq!(q.p25, 17.5);
    }

    #[test]
    fn report_json_field_names() {
        let r = MetricReport { dice: 1.0, dq: 1.0, sq: 1.0, pq: 1.0, tp: 3, fp: 0, fn_: 1 };
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["dice", "dq", "fn", "fp", "pq", "sq", "tp"]);
    }

    fn arb_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            (prop::collection::vec(any::<bool>(), w * h), prop::collection::vec(any::<bool>(), w * h)).prop_map(
                move |(a, b)| (BinaryMask { width: w, height: h, bits: a }, BinaryMask { width: w, height: h, bits: b }),
            )
        })
    }

    proptest! {
        #[test]
        fn dice_symmetric_and_tied_to_iou((a, b) in arb_pair()) {
            prop_assume!(!(a.is_empty() && b.is_empty()));
            let d = dice(&a, &b, None).unwrap();
            prop_assert_eq!(d, dice(&b, &a, None).unwrap());
            let j = iou(&a, &b).unwrap();
            prop_assert!((d - 2.0 * j / (1.0 + j)).abs() < 1e-12);
        }

        #[test]
        fn summary_is_ordered(v in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            let s = summary_stats(&v, StdMode::Sample).unwrap();
            prop_assert!(s.min <= s.p25 && s.p25 <= s.median && s.median <= s.p75 && s.p75 <= s.max);
        }

        #[test]
        fn recall_any_ignores_order(mut lists in prop::collection::vec(prop::collection::vec(0u8..6, 0..5), 1..20), seed in any::<u64>()) {
            let correct: Vec<u8> = (0..lists.len()).map(|i| ((seed >> (i % 60)) & 3) as u8).collect();
            let before = recall_at_k(&lists, &correct, 5, RecallMode::Any).unwrap();
            for l in &mut lists { l.reverse(); }
            prop_assert_eq!(before, recall_at_k(&lists, &correct, 5, RecallMode::Any).unwrap());
        }
    }
}
