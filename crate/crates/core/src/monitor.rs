//! Longitudinal monitoring: per-patient disease-extent profiles and the
//! trend-agreement analysis between 2-D (radiograph) and 3-D (CT) ratios.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::metrics::pearson_r;
use crate::severity::SEVERITY_CSV_HEADER;

/// One input row: a scored time point for one patient. Either ratio may be
/// absent, but not both.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRow {
    pub patient_id: String,
    pub time: i64,
    pub ratio_2d: Option<f64>,
    pub ratio_3d: Option<f64>,
}

/// One time point of a built profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub time: i64,
    pub ratio_2d: Option<f64>,
    pub ratio_3d: Option<f64>,
}

/// A patient's profile, sorted by time index. Indices are ordinal only; the
/// analysis never relies on the interval lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientSeries {
    pub patient_id: String,
    pub points: Vec<SeriesPoint>,
}

impl PatientSeries {
    /// Profile CSV: `time,ratio_2d,ratio_3d`, absent values left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,ratio_2d,ratio_3d\n");
        let fmt = |v: Option<f64>| v.map(|r| format!("{r:.6}")).unwrap_or_default();
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.time, fmt(p.ratio_2d), fmt(p.ratio_3d)));
        }
        out
    }
}

/// Agreement statistics for one patient (or the pooled dataset).
#[derive(Debug, Clone, PartialEq)]
pub struct PatientAgreement {
    pub patient_id: String,
    pub n_points: usize,
    /// Absent when fewer than two time points carry both ratios.
    pub agreement: Option<f64>,
}

/// Dataset-level summary of the 2-D/3-D comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSummary {
    pub per_patient: Vec<PatientAgreement>,
    pub pooled_points: usize,
    /// Accuracy over all patients' trend-label pairs concatenated.
    pub pooled_agreement: Option<f64>,
    /// Pearson correlation between paired 2-D/3-D ratios across the dataset.
    pub pearson_2d_3d: Option<f64>,
}

/// Direction labels for consecutive time points: 1 where the series rose
/// (`next/prev > 1`), else 0. A zero previous value labels 1 exactly when
/// disease appeared (next > 0).
pub fn trend_labels(values: &[f64]) -> Result<Vec<u8>> {
    if values.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "trend labels need at least 2 points, got {}",
            values.len()
        )));
    }
    if values.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidData("trend values must be nonnegative".into()));
    }
    Ok(values
        .windows(2)
        .map(|w| {
            let up = if w[0] == 0.0 { w[1] > 0.0 } else { w[1] / w[0] > 1.0 };
            up as u8
        })
        .collect())
}

/// Fraction of positions where the two label lists agree.
pub fn agreement_accuracy(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            expected: a.len(),
            actual: b.len(),
            what: "trend label lists".into(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidParam("agreement of empty label lists is undefined".into()));
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Groups rows by patient, sorts by time, and computes the trend agreement
/// between the 2-D and 3-D ratios.
///
/// Only time points carrying both ratios enter the agreement computation
/// (other points stay in the profile). `ct_floor`, when set, additionally
/// excludes points whose 3-D ratio lies below the floor from the agreement
/// labels (a mild-disease cutoff); the Pearson correlation always uses all
/// paired points.
pub fn build_profiles(
    rows: &[MonitorRow],
    ct_floor: Option<f64>,
) -> Result<(Vec<PatientSeries>, ProfileSummary)> {
    let mut grouped: BTreeMap<&str, Vec<&MonitorRow>> = BTreeMap::new();
    for row in rows {
        if row.ratio_2d.is_none() && row.ratio_3d.is_none() {
            return Err(Error::InvalidData(format!(
                "patient {} time {} carries neither ratio",
                row.patient_id, row.time
            )));
        }
        grouped.entry(&row.patient_id).or_default().push(row);
    }

    let mut profiles = Vec::with_capacity(grouped.len());
    let mut per_patient = Vec::with_capacity(grouped.len());
    let mut pooled_a: Vec<u8> = Vec::new();
    let mut pooled_b: Vec<u8> = Vec::new();
    let mut paired_2d: Vec<f64> = Vec::new();
    let mut paired_3d: Vec<f64> = Vec::new();
    let mut pooled_points = 0usize;

    for (id, mut patient_rows) in grouped {
        patient_rows.sort_by_key(|r| r.time);
        for pair in patient_rows.windows(2) {
            if pair[0].time == pair[1].time {
                return Err(Error::InvalidData(format!(
                    "duplicate time point {} for patient {id}",
                    pair[0].time
                )));
            }
        }
        let points: Vec<SeriesPoint> = patient_rows
            .iter()
            .map(|r| SeriesPoint { time: r.time, ratio_2d: r.ratio_2d, ratio_3d: r.ratio_3d })
            .collect();

        // Paired sub-series for the agreement labels.
        let mut v2 = Vec::new();
        let mut v3 = Vec::new();
        for p in &points {
            if let (Some(a), Some(b)) = (p.ratio_2d, p.ratio_3d) {
                paired_2d.push(a);
                paired_3d.push(b);
                if ct_floor.map_or(true, |floor| b >= floor) {
                    v2.push(a);
                    v3.push(b);
                }
            }
        }
        let agreement = if v2.len() >= 2 {
            let la = trend_labels(&v2)?;
            let lb = trend_labels(&v3)?;
            pooled_a.extend_from_slice(&la);
            pooled_b.extend_from_slice(&lb);
            Some(agreement_accuracy(&la, &lb)?)
        } else {
            None
        };

        pooled_points += points.len();
        per_patient.push(PatientAgreement {
            patient_id: id.to_string(),
            n_points: points.len(),
            agreement,
        });
        profiles.push(PatientSeries { patient_id: id.to_string(), points });
    }

    let pooled_agreement =
        if pooled_a.is_empty() { None } else { Some(agreement_accuracy(&pooled_a, &pooled_b)?) };
    let pearson_2d_3d = if paired_2d.len() >= 2 {
        pearson_r(&paired_2d, &paired_3d).ok()
    } else {
        None
    };

    Ok((
        profiles,
        ProfileSummary { per_patient, pooled_points, pooled_agreement, pearson_2d_3d },
    ))
}

/// Summary CSV: one row per patient plus a final pooled row. The Pearson
/// column is filled on the pooled row.
pub fn summary_csv(summary: &ProfileSummary) -> String {
    let mut out = String::from("patient_id,n_points,agreement,pearson_r\n");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for p in &summary.per_patient {
        out.push_str(&format!("{},{},{},\n", p.patient_id, p.n_points, fmt(p.agreement)));
    }
    out.push_str(&format!(
        "pooled,{},{},{}\n",
        summary.pooled_points,
        fmt(summary.pooled_agreement),
        fmt(summary.pearson_2d_3d)
    ));
    out
}

/// Parses monitoring input: the severity CSV schema, optionally extended
/// with a trailing `ratio_3d` column. Empty ratio fields mean absent.
pub fn parse_monitor_csv(text: &str) -> Result<Vec<MonitorRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(None, "empty monitoring CSV"))?;
    let with_3d = format!("{SEVERITY_CSV_HEADER},ratio_3d");
    let has_3d = if header == with_3d {
        true
    } else if header == SEVERITY_CSV_HEADER {
        false
    } else {
        return Err(Error::parse(None, format!("unrecognized CSV header: {header}")));
    };
    let want_fields = 8 + has_3d as usize;
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != want_fields {
            return Err(Error::parse(
                None,
                format!("line {}: expected {} fields, got {}", lineno + 2, want_fields, fields.len()),
            ));
        }
        let opt_f64 = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| Error::parse(None, format!("line {}: bad {what}: {s}", lineno + 2)))
        };
        let patient_id = fields[0].to_string();
        if patient_id.is_empty() {
            return Err(Error::parse(None, format!("line {}: empty patient id", lineno + 2)));
        }
        let time: i64 = fields[1]
            .parse()
            .map_err(|_| Error::parse(None, format!("line {}: bad time: {}", lineno + 2, fields[1])))?;
        let ratio_2d = opt_f64(fields[2], "ratio_total")?;
        let ratio_3d = if has_3d { opt_f64(fields[8], "ratio_3d")? } else { None };
        rows.push(MonitorRow { patient_id, time, ratio_2d, ratio_3d });
    }
    Ok(rows)
}
