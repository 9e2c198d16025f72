//! Box-overlap detection scoring: IoU, greedy matching, challenge precision,
//! per-image average precision, dataset mAP, and the localization-threshold
//! sweep.

use crate::error::{Error, Result};
use crate::mapalgebra::{components_to_bboxes, threshold_mask, BBox, HeatMap};
use crate::metrics::MatchCounts;
use crate::scalar::Real;

/// IoU thresholds used for per-image average precision: 0.40 to 0.75 in
/// steps of 0.05.
pub fn ap_thresholds() -> [f64; 8] {
    std::array::from_fn(|k| (40 + 5 * k) as f64 / 100.0)
}

/// Localization thresholds swept when scoring activation maps.
pub const LOCALIZATION_THRESHOLDS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

/// Intersection over union of pixel areas; disjoint boxes give 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (inter, union) = overlap(a, b);
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

/// Integer (intersection, union) pixel areas.
fn overlap(a: &BBox, b: &BBox) -> (u64, u64) {
    let ix = (a.x + a.w).min(b.x + b.w).saturating_sub(a.x.max(b.x)) as u64;
    let iy = (a.y + a.h).min(b.y + b.h).saturating_sub(a.y.max(b.y)) as u64;
    let inter = ix * iy;
    (inter, a.area() as u64 + b.area() as u64 - inter)
}

/// Greedy one-to-one matching in descending-IoU order: a (pred, gt) pair is
/// eligible iff IoU ≥ `iou_t`; each box participates in at most one match.
/// Ties in IoU are broken by lower prediction index, then lower GT index.
pub fn match_boxes(pred: &[BBox], gt: &[BBox], iou_t: f64) -> MatchCounts {
    debug_assert!((0.0..1.0).contains(&iou_t) && iou_t > 0.0, "iou_t must be in (0,1)");
    // (pred idx, gt idx, inter, union) for pairs at or above threshold.
    let mut pairs: Vec<(usize, usize, u64, u64)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let (inter, union) = overlap(p, g);
            if inter as f64 / union as f64 >= iou_t {
                pairs.push((i, j, inter, union));
            }
        }
    }
    // Descending IoU by exact cross-multiplied comparison (no float ties).
    pairs.sort_by(|p, q| {
        let lhs = p.2 as u128 * q.3 as u128;
        let rhs = q.2 as u128 * p.3 as u128;
        rhs.cmp(&lhs).then(p.0.cmp(&q.0)).then(p.1.cmp(&q.1))
    });
    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut tp = 0usize;
    for (i, j, _, _) in pairs {
        if !pred_used[i] && !gt_used[j] {
            pred_used[i] = true;
            gt_used[j] = true;
            tp += 1;
        }
    }
    MatchCounts { true_pos: tp, false_pos: pred.len() - tp, false_neg: gt.len() - tp }
}

/// Challenge precision `TP / (TP + FP + FN)`; an image with no lesions and
/// no predictions counts as perfect (1.0).
pub fn rsna_precision(c: MatchCounts) -> f64 {
    let denom = c.true_pos + c.false_pos + c.false_neg;
    if denom == 0 {
        return 1.0;
    }
    c.true_pos as f64 / denom as f64
}

/// Mean challenge precision over the eight IoU thresholds.
pub fn image_ap(pred: &[BBox], gt: &[BBox]) -> f64 {
    let ts = ap_thresholds();
    ts.iter().map(|&t| rsna_precision(match_boxes(pred, gt, t))).sum::<f64>() / ts.len() as f64
}

/// Mean per-image AP over a nonempty dataset.
pub fn map_score(dataset: &[(Vec<BBox>, Vec<BBox>)]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidParam("mAP of an empty dataset is undefined".into()));
    }
    Ok(dataset.iter().map(|(p, g)| image_ap(p, g)).sum::<f64>() / dataset.len() as f64)
}

/// For each localization threshold: binarize every map, extract component
/// boxes, and score the resulting detections against the ground truth.
/// Returns (threshold, mAP) pairs.
pub fn localization_sweep<T: Real>(
    maps: &[HeatMap<T>],
    gts: &[Vec<BBox>],
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if maps.len() != gts.len() {
        return Err(Error::SizeMismatch {
            expected: gts.len(),
            actual: maps.len(),
            what: "localization maps vs ground-truth lists".into(),
        });
    }
    let mut out = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let mut dataset = Vec::with_capacity(maps.len());
        for (m, gt) in maps.iter().zip(gts) {
            let boxes = components_to_bboxes(&threshold_mask(m, t)?);
            dataset.push((boxes, gt.clone()));
        }
        out.push((t, map_score(&dataset)?));
    }
    Ok(out)
}
