//! `radkit eval`: score detections or segmentations against ground truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use radkit_core::mapalgebra::{load_stack, BBox, BinaryMask2D};
use radkit_core::metrics::{dice, jaccard, localization_sweep, map_score, LOCALIZATION_THRESHOLDS};

use crate::commands::{write_text, Staging};
use crate::config::Ctx;
use crate::errors::{AppError, AppResult, StageContext};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted boxes, TSV `image_id<TAB>x<TAB>y<TAB>w<TAB>h`.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Ground-truth boxes in the same TSV layout.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Predicted segmentation (PGM); scored with Dice/Jaccard against --gt-mask.
    #[arg(long)]
    pub pred_mask: Option<PathBuf>,
    /// Ground-truth segmentation (PGM).
    #[arg(long)]
    pub gt_mask: Option<PathBuf>,
    /// Float heat-map stack; with --sweep, image ids in --gt index the stack.
    #[arg(long)]
    pub maps: Option<PathBuf>,
    /// Sweep segmentation thresholds 0.5..0.9 over the map stack.
    #[arg(long)]
    pub sweep: bool,
}

/// Writes `metrics.csv` with `metric,threshold,value` rows and mirrors them
/// on stdout. Box mode reports the detection mAP; mask mode reports Dice and
/// Jaccard; sweep mode reports mAP per segmentation threshold.
pub fn run(ctx: &Ctx, args: EvalArgs) -> AppResult<()> {
    let boxes_mode = args.pred.is_some();
    let masks_mode = args.pred_mask.is_some() || args.gt_mask.is_some();
    let sweep_mode = args.maps.is_some() || args.sweep;
    if usize::from(boxes_mode) + usize::from(masks_mode) + usize::from(sweep_mode) != 1 {
        return Err(AppError::usage(
            "eval needs exactly one of --pred/--gt, --pred-mask/--gt-mask, or --maps/--gt --sweep",
        ));
    }

    let mut rows: Vec<(String, Option<f64>, f64)> = Vec::new();
    if boxes_mode {
        let pred_path = args.pred.expect("checked above");
        let gt_path = args
            .gt
            .ok_or_else(|| AppError::usage("eval --pred needs a matching --gt box file"))?;
        let dataset = paired_boxes(&parse_boxes(&pred_path)?, &parse_boxes(&gt_path)?);
        let map = map_score(&dataset).stage("map")?;
        rows.push(("map".into(), None, map));
    } else if masks_mode {
        let pred_path = args
            .pred_mask
            .ok_or_else(|| AppError::usage("eval mask mode needs --pred-mask"))?;
        let gt_path = args
            .gt_mask
            .ok_or_else(|| AppError::usage("eval mask mode needs --gt-mask"))?;
        let pred = BinaryMask2D::load_pgm(&pred_path).stage("load-pred-mask")?;
        let gt = BinaryMask2D::load_pgm(&gt_path).stage("load-gt-mask")?;
        rows.push(("dice".into(), None, dice(&pred, &gt).stage("dice")?));
        rows.push(("jaccard".into(), None, jaccard(&pred, &gt).stage("jaccard")?));
    } else {
        if !args.sweep {
            return Err(AppError::usage("eval --maps requires --sweep"));
        }
        let maps_path = args.maps.ok_or_else(|| AppError::usage("eval --sweep needs --maps"))?;
        let gt_path =
            args.gt.ok_or_else(|| AppError::usage("eval --sweep needs --gt with stack indices"))?;
        let maps = load_stack::<f64>(&maps_path).stage("load-maps")?;
        let gts = indexed_boxes(&parse_boxes(&gt_path)?, maps.len())?;
        let table = localization_sweep(&maps, &gts, &LOCALIZATION_THRESHOLDS).stage("sweep")?;
        for (threshold, map) in table {
            rows.push(("localization_map".into(), Some(threshold), map));
        }
    }

    let mut csv = String::from("metric,threshold,value\n");
    for (metric, threshold, value) in &rows {
        let t = threshold.map(|t| format!("{t:.6}")).unwrap_or_default();
        writeln!(csv, "{metric},{t},{value:.9}").expect("string write");
        match threshold {
            Some(t) => println!("eval: {metric}@{t:.2} = {value:.9}"),
            None => println!("eval: {metric} = {value:.9}"),
        }
    }
    let out = ctx.out_dir();
    let staging = Staging::new(&out)?;
    write_text(&staging.path().join("metrics.csv"), &csv)?;
    staging.commit(&out)?;
    Ok(())
}

/// Parses `image_id<TAB>x<TAB>y<TAB>w<TAB>h` rows; `#` comments and blank
/// lines are skipped. An id may repeat, one row per box.
fn parse_boxes(path: &Path) -> AppResult<Vec<(String, BBox)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| {
            AppError::data(format!("{} line {}: {what}", path.display(), lineno + 1))
        };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(bad("expected image_id, x, y, w, h"));
        }
        let mut nums = [0usize; 4];
        for (i, f) in fields[1..].iter().enumerate() {
            nums[i] = f.parse().map_err(|_| bad(&format!("bad number `{f}`")))?;
        }
        let bbox = BBox::new(nums[0], nums[1], nums[2], nums[3])
            .map_err(|e| bad(&e.to_string()))?;
        out.push((fields[0].to_string(), bbox));
    }
    Ok(out)
}

/// Aligns predictions and ground truth over the union of image ids; an id
/// missing from one side contributes an empty box list there.
fn paired_boxes(
    preds: &[(String, BBox)],
    gts: &[(String, BBox)],
) -> Vec<(Vec<BBox>, Vec<BBox>)> {
    let mut by_id: BTreeMap<&str, (Vec<BBox>, Vec<BBox>)> = BTreeMap::new();
    for (id, b) in preds {
        by_id.entry(id).or_default().0.push(*b);
    }
    for (id, b) in gts {
        by_id.entry(id).or_default().1.push(*b);
    }
    by_id.into_values().collect()
}

/// Ground truth for sweep mode: image ids are stack indices.
fn indexed_boxes(gts: &[(String, BBox)], n: usize) -> AppResult<Vec<Vec<BBox>>> {
    let mut out = vec![Vec::new(); n];
    for (id, b) in gts {
        let idx: usize = id
            .parse()
            .map_err(|_| AppError::data(format!("sweep ground truth id `{id}` is not a stack index")))?;
        if idx >= n {
            return Err(AppError::data(format!("ground truth index {idx} outside stack of {n} maps")));
        }
        out[idx].push(*b);
    }
    Ok(out)
}
