//! `radkit phantom`: render a synthetic CT time series with ground truth.

use std::path::PathBuf;

use clap::Args;
use radkit_core::volume::{generate_phantom, save_mask, save_volume, PhantomSpec};

use crate::commands::Staging;
use crate::config::Ctx;
use crate::errors::{AppError, AppResult, StageContext};

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// Phantom description file (TOML).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Generate only the first N time points instead of the spec's full range.
    #[arg(long)]
    pub times: Option<usize>,
}

/// Writes `vol_t<t>.raw`, `lungs_t<t>.raw`, and `lesion_t<t>.raw` (plus
/// `.meta` sidecars) for each requested time point. Everything is staged and
/// renamed into the output directory at the end, so an invalid spec or a
/// failure halfway through leaves no partial output behind.
pub fn run(ctx: &Ctx, args: PhantomArgs) -> AppResult<()> {
    let spec_path = ctx
        .file
        .path("phantom_spec", args.spec)
        .ok_or_else(|| AppError::usage("phantom needs --spec (or phantom_spec in the config)"))?;
    let spec = PhantomSpec::load(&spec_path).stage("load-spec")?;

    let times = ctx.file.opt_value("times", args.times)?.unwrap_or(spec.time_points);
    if times == 0 || times > spec.time_points {
        return Err(AppError::usage(format!(
            "--times must be in 1..={}, got {times}",
            spec.time_points
        )));
    }

    let out = ctx.out_dir();
    let staging = Staging::new(&out)?;
    for t in 0..times {
        let (vol, lungs, lesion) = generate_phantom(&spec, t).stage("generate")?;
        let grid = vol.grid();
        save_volume(&vol, &staging.path().join(format!("vol_t{t}.raw"))).stage("write-volume")?;
        save_mask(&lungs, grid, &staging.path().join(format!("lungs_t{t}.raw"))).stage("write-mask")?;
        save_mask(&lesion, grid, &staging.path().join(format!("lesion_t{t}.raw"))).stage("write-mask")?;
    }
    staging.commit(&out)?;
    println!("phantom: wrote {times} time point(s) to {}", out.display());
    Ok(())
}
