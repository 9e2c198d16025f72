//! Evaluation numerics: box-overlap detection scoring, ROC/operating-point
//! statistics, mask agreement (Dice/Jaccard), correlation and least-squares
//! fits, and the combined classification + localization training loss.

mod detect;
mod regress;
mod roc;

pub use detect::{
    ap_thresholds, image_ap, iou, localization_sweep, map_score, match_boxes, rsna_precision,
    LOCALIZATION_THRESHOLDS,
};
pub use regress::{linfit, pearson_r, r_squared};
pub use roc::{auc, confusion_stats, optimal_operating_point, roc_curve, ConfusionStats, RocPoint};

use crate::error::{Error, Result};
use crate::mapalgebra::{BinaryMask2D, HeatMap};
use crate::scalar::Real;

/// Outcome of matching predicted boxes against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

/// Clamp bound keeping the cross-entropy finite on saturated predictions.
pub const BCE_EPSILON: f64 = 1e-7;
/// Default weight of the map-regression term in the combined loss.
pub const LOSS_LAMBDA: f64 = 1e-5;

/// Dice coefficient `2|A∩B| / (|A|+|B|)`; two empty masks agree perfectly (1).
pub fn dice(a: &BinaryMask2D, b: &BinaryMask2D) -> Result<f64> {
    let (i, ca, cb) = overlap_counts(a, b)?;
    if ca + cb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * i as f64 / (ca + cb) as f64)
}

/// Jaccard index `|A∩B| / |A∪B|`; two empty masks agree perfectly (1).
pub fn jaccard(a: &BinaryMask2D, b: &BinaryMask2D) -> Result<f64> {
    let (i, ca, cb) = overlap_counts(a, b)?;
    let union = ca + cb - i;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(i as f64 / union as f64)
}

fn overlap_counts(a: &BinaryMask2D, b: &BinaryMask2D) -> Result<(usize, usize, usize)> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::dims_2d((a.width(), a.height()), (b.width(), b.height()), "mask pair"));
    }
    Ok((a.intersection_count(b), a.count(), b.count()))
}

/// Binary cross-entropy on the image label plus `lambda` times the mean
/// squared pixel error between the predicted and target maps.
///
/// The predicted probability is clamped to `[ε, 1−ε]` (ε = 1e−7) so the loss
/// stays finite; `label` must lie in [0,1].
pub fn combined_loss<T: Real>(
    pred_prob: f64,
    label: f64,
    pred_map: &HeatMap<T>,
    gt_map: &HeatMap<T>,
    lambda: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&label) {
        return Err(Error::InvalidParam(format!("label must be in [0,1], got {label}")));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidParam(format!("lambda must be nonnegative, got {lambda}")));
    }
    if pred_map.width() != gt_map.width() || pred_map.height() != gt_map.height() {
        return Err(Error::dims_2d(
            (pred_map.width(), pred_map.height()),
            (gt_map.width(), gt_map.height()),
            "loss map pair",
        ));
    }
    let p = pred_prob.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    let bce = -(label * p.ln() + (1.0 - label) * (1.0 - p).ln());
    let n = pred_map.values().len() as f64;
    let mse = pred_map
        .values()
        .iter()
        .zip(gt_map.values())
        .map(|(&p, &g)| {
            let d = p.to_f64().unwrap() - g.to_f64().unwrap();
            d * d
        })
        .sum::<f64>()
        / n;
    Ok(bce + lambda * mse)
}
