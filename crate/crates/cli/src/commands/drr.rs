//! `radkit drr`: render digitally reconstructed radiographs from a CT volume.

use std::path::{Path, PathBuf};

use clap::Args;
use radkit_core::materials::{decompose, AIR_MAX_HU, BONE_MIN_HU};
use radkit_core::materials::{apply_chest_mask, chest_mask};
use radkit_core::projector::{
    add_noise, estimate_scatter, postprocess, project, project_mask, save_radiograph_raw, BeamMode,
    DetectorGeometry, Radiograph, View,
};
use radkit_core::volume::{load_mask, load_volume, CtVolume, Grid3};

use crate::commands::Staging;
use crate::config::{
    BeamArg, Ctx, Switch, ViewsArg, DEFAULT_CONE, DEFAULT_DETECTOR, DEFAULT_PIXEL_MM,
    DEFAULT_SCATTER_FRACTION, DEFAULT_SCATTER_SIGMA_PX,
};
use crate::data::{load_attenuation, load_spectrum};
use crate::errors::{AppError, AppResult, StageContext};

#[derive(Debug, Args)]
pub struct DrrArgs {
    /// Input CT volume (`.raw` + `.meta` sidecar).
    #[arg(long)]
    pub volume: Option<PathBuf>,
    /// 3-D lung mask to project alongside the radiograph as a silhouette.
    #[arg(long)]
    pub lungs_mask: Option<PathBuf>,
    /// 3-D lesion mask to project alongside the radiograph as a silhouette.
    #[arg(long)]
    pub lesion_mask: Option<PathBuf>,
    /// Which projections to render.
    #[arg(long, value_enum)]
    pub views: Option<ViewsArg>,
    /// Beam geometry.
    #[arg(long, value_enum)]
    pub beam: Option<BeamArg>,
    #[arg(long)]
    pub detector_width: Option<usize>,
    #[arg(long)]
    pub detector_height: Option<usize>,
    /// Detector pixel pitch in millimetres.
    #[arg(long)]
    pub pixel_mm: Option<f64>,
    /// Source-to-detector distance (cone beam only), millimetres.
    #[arg(long)]
    pub sdd_mm: Option<f64>,
    /// Source-to-isocenter distance (cone beam only), millimetres.
    #[arg(long)]
    pub sad_mm: Option<f64>,
    /// Beam spectrum TSV; defaults to the built-in 120 kVp table.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// Attenuation table TSV; defaults to the built-in NIST-derived table.
    #[arg(long)]
    pub attenuation: Option<PathBuf>,
    /// Add a blurred scatter estimate to the primary image.
    #[arg(long, value_enum)]
    pub scatter: Option<Switch>,
    /// Scatter-to-primary energy fraction.
    #[arg(long)]
    pub scatter_fraction: Option<f64>,
    /// Scatter blur width in detector pixels.
    #[arg(long)]
    pub scatter_sigma_px: Option<f64>,
    /// Draw per-pixel Poisson photon noise (seeded by --seed).
    #[arg(long, value_enum)]
    pub noise: Option<Switch>,
    /// HU at or below which a voxel counts as air.
    #[arg(long)]
    pub air_max_hu: Option<i16>,
    /// HU at or above which a voxel counts as bone.
    #[arg(long)]
    pub bone_min_hu: Option<i16>,
}

fn view_name(v: View) -> &'static str {
    match v {
        View::Pa => "pa",
        View::Ap => "ap",
    }
}

/// Renders the requested views. Per view the pipeline is material
/// decomposition, chest isolation, forward projection, optional scatter and
/// noise, then 8-bit postprocessing; each stage failure names the stage.
pub fn run(ctx: &Ctx, args: DrrArgs) -> AppResult<()> {
    let volume_path = ctx
        .file
        .path("volume", args.volume)
        .ok_or_else(|| AppError::usage("drr needs --volume (or volume in the config)"))?;

    let (width, height) = (
        ctx.file.value("detector_width", args.detector_width, DEFAULT_DETECTOR.0)?,
        ctx.file.value("detector_height", args.detector_height, DEFAULT_DETECTOR.1)?,
    );
    let pixel_mm = ctx.file.value("pixel_mm", args.pixel_mm, DEFAULT_PIXEL_MM)?;
    let beam = ctx.file.value("beam", args.beam, BeamArg::Parallel)?;
    let mode = match beam {
        BeamArg::Parallel => BeamMode::Parallel,
        BeamArg::Cone => BeamMode::Cone {
            sdd_mm: ctx.file.value("sdd_mm", args.sdd_mm, DEFAULT_CONE.0)?,
            sad_mm: ctx.file.value("sad_mm", args.sad_mm, DEFAULT_CONE.1)?,
        },
    };
    let views = ctx.file.value("views", args.views, ViewsArg::Both)?;
    let scatter = ctx.file.switch("scatter", args.scatter, false)?;
    let scatter_fraction =
        ctx.file.value("scatter_fraction", args.scatter_fraction, DEFAULT_SCATTER_FRACTION)?;
    let scatter_sigma_px =
        ctx.file.value("scatter_sigma_px", args.scatter_sigma_px, DEFAULT_SCATTER_SIGMA_PX)?;
    let noise = ctx.file.switch("noise", args.noise, false)?;
    let air_max_hu = ctx.file.value("air_max_hu", args.air_max_hu, AIR_MAX_HU)?;
    let bone_min_hu = ctx.file.value("bone_min_hu", args.bone_min_hu, BONE_MIN_HU)?;
    let seed = ctx.seed()?;

    let spectrum = load_spectrum(ctx.file.path("spectrum", args.spectrum).as_deref())?;
    let attenuation = load_attenuation(ctx.file.path("attenuation", args.attenuation).as_deref())?;

    let volume = load_volume(&volume_path).stage("load-volume")?;
    // Isolate the patient: decompose, keep the largest solid component with
    // its interior, blank everything else to air, and decompose again.
    let rough = decompose(&volume, air_max_hu, bone_min_hu).stage("decompose")?;
    let chest = chest_mask(&rough);
    let clean = apply_chest_mask(&volume, &chest).stage("apply-chest-mask")?;
    let masks = decompose(&clean, air_max_hu, bone_min_hu).stage("decompose")?;
    let grid = clean.grid();

    let out = ctx.out_dir();
    let staging = Staging::new(&out)?;

    for &view in views.views() {
        let det = DetectorGeometry { width, height, pixel_mm, mode, view };
        let name = view_name(view);

        let mut img = project::<f64>(&masks, &grid, &det, &spectrum, &attenuation).stage("project")?;
        if scatter {
            let sc = estimate_scatter(&img, scatter_fraction, scatter_sigma_px).stage("scatter")?;
            let total: Vec<f64> = img.values().iter().zip(sc.values()).map(|(p, s)| p + s).collect();
            img = Radiograph::new(*img.geometry(), total).stage("scatter")?;
        }
        if noise {
            img = add_noise(&img, &spectrum, seed).stage("noise")?;
        }

        save_radiograph_raw(&img, &staging.path().join(format!("drr_{name}.raw"))).stage("write-raw")?;
        let image8 = postprocess(&img);
        image8.save_pgm(&staging.path().join(format!("drr_{name}.pgm"))).stage("write-image")?;

        if let Some(path) = ctx.file.path("lungs_mask", args.lungs_mask.clone()) {
            project_silhouette(&path, &clean, &det, &staging.path().join(format!("lungs_{name}.pgm")))?;
        }
        if let Some(path) = ctx.file.path("lesion_mask", args.lesion_mask.clone()) {
            project_silhouette(&path, &clean, &det, &staging.path().join(format!("lesion_{name}.pgm")))?;
        }
        println!("drr: wrote {} view to {}", name, out.display());
    }
    staging.commit(&out)?;
    Ok(())
}

/// Projects a 3-D mask on the same grid as the volume down to a binary
/// detector-plane silhouette.
fn project_silhouette(
    mask_path: &Path,
    volume: &CtVolume,
    det: &DetectorGeometry,
    out_path: &Path,
) -> AppResult<()> {
    let (mask, mask_grid) = load_mask(mask_path).stage("load-mask")?;
    let grid: Grid3 = volume.grid();
    if mask_grid.dims != grid.dims {
        return Err(AppError::data(format!(
            "project-mask: mask grid {:?} does not match volume grid {:?}",
            mask_grid.dims, grid.dims
        )));
    }
    let silhouette = project_mask(&mask, &grid, det).stage("project-mask")?;
    silhouette.save_pgm(out_path).stage("write-mask-image")?;
    Ok(())
}
