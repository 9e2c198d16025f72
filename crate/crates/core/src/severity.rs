//! Disease-extent scoring: the pneumonia ratio (lesion area over lung area),
//! per-lung splitting, the 0–4 involvement levels, and the 3-D volume analog.

use crate::error::{Error, Result};
use crate::mapalgebra::{label_components8, BinaryMask2D};
use crate::volume::VoxelMask;

/// Per-image severity summary.
///
/// Ratios are percentages in [0,100]; levels are the 0–4 involvement bins,
/// and `total_score` (0–8) is their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeverityRecord {
    pub ratio_total: f64,
    pub ratio_left: f64,
    pub ratio_right: f64,
    pub level_left: u8,
    pub level_right: u8,
    pub total_score: u8,
}

/// Header of the severity CSV emitted per scored image.
pub const SEVERITY_CSV_HEADER: &str =
    "patient_id,time,ratio_total,ratio_left,ratio_right,level_left,level_right,total_score";

impl SeverityRecord {
    /// One CSV row under [`SEVERITY_CSV_HEADER`].
    pub fn to_csv_row(&self, patient_id: &str, time: i64) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{},{},{}",
            patient_id,
            time,
            self.ratio_total,
            self.ratio_left,
            self.ratio_right,
            self.level_left,
            self.level_right,
            self.total_score
        )
    }
}

/// Percentage of the lung area covered by the lesion mask. Lesion pixels
/// outside the lungs are ignored.
pub fn pneumonia_ratio(lesion: &BinaryMask2D, lungs: &BinaryMask2D) -> Result<f64> {
    if lesion.width() != lungs.width() || lesion.height() != lungs.height() {
        return Err(Error::dims_2d(
            (lungs.width(), lungs.height()),
            (lesion.width(), lesion.height()),
            "lesion vs lung mask",
        ));
    }
    let lung_area = lungs.count();
    if lung_area == 0 {
        return Err(Error::InvalidData("pneumonia ratio needs a nonempty lung mask".into()));
    }
    Ok(100.0 * lesion.intersection_count(lungs) as f64 / lung_area as f64)
}

/// Splits a lung mask into (image-left, image-right) sides.
///
/// With two or more 8-connected components, the two largest are returned
/// whole, ordered by centroid x (smaller x first). A single fused component
/// is cut at its centroid column instead. Left/right follow image
/// coordinates; anatomical mirroring is a display concern.
pub fn split_lungs(lungs: &BinaryMask2D) -> Result<(BinaryMask2D, BinaryMask2D)> {
    if lungs.count() == 0 {
        return Err(Error::InvalidData("cannot split an empty lung mask".into()));
    }
    let (w, h) = (lungs.width(), lungs.height());
    let (labels, n) = label_components8(lungs);
    let mut size = vec![0usize; n as usize];
    let mut sum_x = vec![0usize; n as usize];
    for y in 0..h {
        for x in 0..w {
            if let Some(k) = labels[y * w + x].checked_sub(1) {
                size[k as usize] += 1;
                sum_x[k as usize] += x;
            }
        }
    }
    if n >= 2 {
        // Two largest components (ties by scan order), sides by centroid x.
        let mut order: Vec<usize> = (0..n as usize).collect();
        order.sort_by(|&a, &b| size[b].cmp(&size[a]).then(a.cmp(&b)));
        let (a, b) = (order[0], order[1]);
        let cx = |k: usize| sum_x[k] as f64 / size[k] as f64;
        let (li, ri) = if cx(a) <= cx(b) { (a, b) } else { (b, a) };
        let pick = |target: usize| {
            BinaryMask2D::from_fn(w, h, |x, y| labels[y * w + x] == (target + 1) as u32)
        };
        return Ok((pick(li), pick(ri)));
    }
    // One component: vertical cut at the centroid column.
    let cut = (sum_x[0] as f64 / size[0] as f64).round() as usize;
    let left = BinaryMask2D::from_fn(w, h, |x, y| lungs.get(x, y) && x < cut);
    let right = BinaryMask2D::from_fn(w, h, |x, y| lungs.get(x, y) && x >= cut);
    Ok((left, right))
}

/// Involvement level for a percentage: 0 only at exactly zero, then
/// (0,25) → 1, [25,50) → 2, [50,75) → 3, and 75 or more → 4.
pub fn bin_extent(ratio: f64) -> Result<u8> {
    if !(0.0..=100.0).contains(&ratio) {
        return Err(Error::InvalidParam(format!("extent ratio must be in [0,100], got {ratio}")));
    }
    Ok(if ratio == 0.0 {
        0
    } else if ratio < 25.0 {
        1
    } else if ratio < 50.0 {
        2
    } else if ratio < 75.0 {
        3
    } else {
        4
    })
}

/// Full severity record: overall ratio plus per-side ratios and levels.
pub fn score_image(lesion: &BinaryMask2D, lungs: &BinaryMask2D) -> Result<SeverityRecord> {
    let ratio_total = pneumonia_ratio(lesion, lungs)?;
    let (left, right) = split_lungs(lungs)?;
    let ratio_left = pneumonia_ratio(lesion, &left)?;
    let ratio_right = pneumonia_ratio(lesion, &right)?;
    let level_left = bin_extent(ratio_left)?;
    let level_right = bin_extent(ratio_right)?;
    Ok(SeverityRecord {
        ratio_total,
        ratio_left,
        ratio_right,
        level_left,
        level_right,
        total_score: level_left + level_right,
    })
}

/// 3-D analog of the pneumonia ratio, by voxel count.
pub fn volume_ratio(lesion: &VoxelMask, lungs: &VoxelMask) -> Result<f64> {
    if lesion.dims() != lungs.dims() {
        return Err(Error::DimMismatch {
            expected: lungs.dims(),
            actual: lesion.dims(),
            what: "lesion vs lung volume mask".into(),
        });
    }
    let lung_vox = lungs.count();
    if lung_vox == 0 {
        return Err(Error::InvalidData("volume ratio needs a nonempty lung mask".into()));
    }
    let inter =
        lesion.bits().iter().zip(lungs.bits()).filter(|(&a, &b)| a & b != 0).count();
    Ok(100.0 * inter as f64 / lung_vox as f64)
}
