//! ROC analysis: curve construction over unique score thresholds, trapezoidal
//! AUC, optimal operating point, and confusion-matrix summary statistics.

use crate::error::{Error, Result};

/// One point of a ROC curve: classify positive iff score ≥ `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Confusion-matrix summary. Ratios whose denominator is zero (e.g. PPV with
/// no positive predictions) are reported as `None` rather than 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionStats {
    pub accuracy: f64,
    pub ppv: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

/// Sweeps the classification threshold over the unique score values
/// (descending), yielding one point per threshold. Equal scores collapse
/// into a single threshold. Requires both classes to be present and all
/// scores to be finite.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::SizeMismatch {
            expected: labels.len(),
            actual: scores.len(),
            what: "scores vs labels".into(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidData("ROC scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidData(
            "ROC analysis needs both positive and negative labels".into(),
        ));
    }
    // Sort samples by descending score; walk thresholds at unique values.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut curve = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut k = 0usize;
    while k < order.len() {
        let t = scores[order[k]];
        // Consume the whole tie group: all samples with score == t.
        while k < order.len() && scores[order[k]] == t {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        curve.push(RocPoint {
            threshold: t,
            sensitivity: tp as f64 / n_pos as f64,
            specificity: (n_neg - fp) as f64 / n_neg as f64,
        });
    }
    Ok(curve)
}

/// Area under the curve by the trapezoidal rule over (1−specificity,
/// sensitivity), anchored at the implicit (0,0) corner. Expects `roc_curve`
/// output order (descending threshold, i.e. ascending false-positive rate).
pub fn auc(curve: &[RocPoint]) -> f64 {
    let mut area = 0.0;
    let (mut x0, mut y0) = (0.0, 0.0);
    for p in curve {
        let x1 = 1.0 - p.specificity;
        let y1 = p.sensitivity;
        area += (x1 - x0) * (y1 + y0) / 2.0;
        (x0, y0) = (x1, y1);
    }
    area
}

/// Point minimizing the squared distance to the ideal corner
/// (sensitivity 1, specificity 1); ties go to the lower threshold.
pub fn optimal_operating_point(curve: &[RocPoint]) -> RocPoint {
    assert!(!curve.is_empty(), "operating point of an empty curve");
    let dist2 = |p: &RocPoint| {
        (1.0 - p.sensitivity) * (1.0 - p.sensitivity) + (1.0 - p.specificity) * (1.0 - p.specificity)
    };
    let mut best = curve[0];
    for p in &curve[1..] {
        let (d, db) = (dist2(p), dist2(&best));
        if d < db || (d == db && p.threshold < best.threshold) {
            best = *p;
        }
    }
    best
}

/// Accuracy, positive predictive value, sensitivity, and specificity of
/// binary predictions against labels.
pub fn confusion_stats(predictions: &[bool], labels: &[bool]) -> ConfusionStats {
    assert_eq!(predictions.len(), labels.len(), "predictions vs labels length");
    assert!(!predictions.is_empty(), "confusion statistics of an empty set");
    let mut tp = 0usize;
    let mut tn = 0usize;
    let mut fp = 0usize;
    let mut fneg = 0usize;
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    ConfusionStats {
        accuracy: (tp + tn) as f64 / predictions.len() as f64,
        ppv: ratio(tp, tp + fp),
        sensitivity: ratio(tp, tp + fneg),
        specificity: ratio(tn, tn + fp),
    }
}
