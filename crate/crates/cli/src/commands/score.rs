//! `radkit score`: turn a localization output into a severity record.

use std::path::PathBuf;

use clap::Args;
use radkit_core::mapalgebra::{
    load_stack, mask_intersect, resize_map, stack_max, threshold_mask, BinaryMask2D, Gray8,
    LOCALIZATION_THRESHOLD,
};
use radkit_core::severity::{score_image, SeverityRecord, SEVERITY_CSV_HEADER};

use crate::commands::{write_text, Staging};
use crate::config::{Ctx, DEFAULT_DETECTION_THRESHOLD};
use crate::errors::{AppError, AppResult, StageContext};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Float heat-map stack (`.raw` + `.meta`) of localization maps.
    #[arg(long)]
    pub stack: Option<PathBuf>,
    /// Binary lesion silhouette (PGM), scored directly instead of a stack.
    #[arg(long)]
    pub lesion_mask: Option<PathBuf>,
    /// Binary lung silhouette (PGM).
    #[arg(long)]
    pub lungs: Option<PathBuf>,
    /// Detector-network probability for this image; below the detection
    /// threshold the record is emitted as negative with zero ratios.
    #[arg(long)]
    pub detection_score: Option<f64>,
    /// Cutoff applied to the fused localization map.
    #[arg(long)]
    pub localization_threshold: Option<f64>,
    /// Detection probability below which the image counts as negative.
    #[arg(long)]
    pub detection_threshold: Option<f64>,
    /// 8-bit radiograph (PGM) to draw the segmentation contour onto.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Identifier written into the CSV row.
    #[arg(long)]
    pub patient_id: Option<String>,
    /// Acquisition time index written into the CSV row.
    #[arg(long)]
    pub time: Option<i64>,
}

/// Fuses the heat-map stack (pixel-wise max), thresholds it, clips the result
/// to the lung field, and scores the segmentation. A detection score below
/// the detection threshold short-circuits to an all-zero negative record.
pub fn run(ctx: &Ctx, args: ScoreArgs) -> AppResult<()> {
    let lungs_path = ctx
        .file
        .path("lungs_mask", args.lungs)
        .ok_or_else(|| AppError::usage("score needs --lungs (or lungs_mask in the config)"))?;
    let stack_path = ctx.file.path("stack", args.stack);
    let lesion_path = ctx.file.path("lesion_mask", args.lesion_mask);
    if stack_path.is_some() == lesion_path.is_some() {
        return Err(AppError::usage("score needs exactly one of --stack or --lesion-mask"));
    }

    let loc_threshold = ctx.unit_threshold(
        "localization_threshold",
        args.localization_threshold,
        LOCALIZATION_THRESHOLD,
    )?;
    let det_threshold = ctx.unit_threshold(
        "detection_threshold",
        args.detection_threshold,
        DEFAULT_DETECTION_THRESHOLD,
    )?;
    let detection_score = ctx.file.opt_value("detection_score", args.detection_score)?;
    let patient_id = ctx.file.string("patient_id", args.patient_id, "unknown");
    let time = ctx.file.value("time", args.time, 0i64)?;

    let lungs = BinaryMask2D::load_pgm(&lungs_path).stage("load-lungs")?;

    // Segmentation candidate before lung clipping.
    let candidate = match (&stack_path, &lesion_path) {
        (Some(p), None) => {
            let maps = load_stack::<f64>(p).stage("load-stack")?;
            let mut fused = stack_max(&maps).stage("fuse")?;
            if (fused.width(), fused.height()) != (lungs.width(), lungs.height()) {
                // Network maps come in at reduced resolution; bring the fused
                // map up to the lung field before thresholding.
                fused = resize_map(&fused, lungs.width(), lungs.height()).stage("resize")?;
            }
            threshold_mask(&fused, loc_threshold).stage("threshold")?
        }
        (None, Some(p)) => {
            let m = BinaryMask2D::load_pgm(p).stage("load-lesion")?;
            if (m.width(), m.height()) != (lungs.width(), lungs.height()) {
                return Err(AppError::data(format!(
                    "lesion mask is {}x{} but lungs are {}x{}",
                    m.width(),
                    m.height(),
                    lungs.width(),
                    lungs.height()
                )));
            }
            m
        }
        _ => unreachable!("validated above"),
    };

    let negative = matches!(detection_score, Some(s) if s < det_threshold);
    let (segmentation, record) = if negative {
        // Classified negative: report zero involvement and draw no contour.
        let empty = BinaryMask2D::empty(lungs.width(), lungs.height());
        let record = SeverityRecord {
            ratio_total: 0.0,
            ratio_left: 0.0,
            ratio_right: 0.0,
            level_left: 0,
            level_right: 0,
            total_score: 0,
        };
        (empty, record)
    } else {
        let seg = mask_intersect(&candidate, &lungs).stage("intersect")?;
        let record = score_image(&seg, &lungs).stage("score")?;
        (seg, record)
    };

    let out = ctx.out_dir();
    let staging = Staging::new(&out)?;
    let csv = format!("{SEVERITY_CSV_HEADER}\n{}\n", record.to_csv_row(&patient_id, time));
    write_text(&staging.path().join("severity.csv"), &csv)?;

    if let Some(image_path) = ctx.file.path("image", args.image) {
        let base = Gray8::load_pgm(&image_path).stage("load-image")?;
        let overlay = draw_contour(&base, &segmentation)?;
        overlay.save_pgm(&staging.path().join("overlay.pgm")).stage("write-overlay")?;
    }
    staging.commit(&out)?;

    if negative {
        println!(
            "score: {patient_id} t={time} negative (detection {:.3} < threshold {det_threshold:.2})",
            detection_score.unwrap_or_default()
        );
    } else {
        println!(
            "score: {patient_id} t={time} ratio_total={:.3} total_score={}",
            record.ratio_total, record.total_score
        );
    }
    Ok(())
}

/// Marks the segmentation boundary at maximum intensity: a pixel is boundary
/// when it is inside the mask but touches the outside (or the image edge)
/// through a 4-neighbour.
fn draw_contour(base: &Gray8, mask: &BinaryMask2D) -> AppResult<Gray8> {
    if (base.width(), base.height()) != (mask.width(), mask.height()) {
        return Err(AppError::data(format!(
            "overlay image is {}x{} but segmentation is {}x{}",
            base.width(),
            base.height(),
            mask.width(),
            mask.height()
        )));
    }
    let (w, h) = (base.width(), base.height());
    let mut out = base.clone();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let exposed = (x == 0 || !mask.get(x - 1, y))
                || (x + 1 == w || !mask.get(x + 1, y))
                || (y == 0 || !mask.get(x, y - 1))
                || (y + 1 == h || !mask.get(x, y + 1));
            if exposed {
                out.set(x, y, u8::MAX);
            }
        }
    }
    Ok(out)
}
