//! `radkit monitor`: aggregate severity CSVs into per-patient profiles.

use std::path::PathBuf;

use clap::Args;
use radkit_core::monitor::{build_profiles, parse_monitor_csv, summary_csv, MonitorRow};

use crate::commands::{sanitize_id, write_text, Staging};
use crate::config::Ctx;
use crate::errors::{AppError, AppResult};

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Severity CSV files (optionally carrying a `ratio_3d` column).
    pub inputs: Vec<PathBuf>,
    /// Ignore trend steps whose 3-D ratio falls below this floor when
    /// computing agreement (correlation still uses every paired point).
    #[arg(long)]
    pub ct_floor: Option<f64>,
}

/// Concatenates all rows, groups them by patient, and writes one
/// `profile_<patient>.csv` per patient plus `summary.csv` with per-patient
/// and pooled agreement/correlation. Row order in the inputs is irrelevant:
/// series are sorted by time and patients by identifier.
pub fn run(ctx: &Ctx, args: MonitorArgs) -> AppResult<()> {
    if args.inputs.is_empty() {
        return Err(AppError::usage("monitor needs at least one severity CSV"));
    }
    let ct_floor = ctx.file.opt_value("ct_floor", args.ct_floor)?;

    let mut rows: Vec<MonitorRow> = Vec::new();
    for path in &args.inputs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
        let mut parsed = parse_monitor_csv(&text)
            .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
        rows.append(&mut parsed);
    }
    if rows.is_empty() {
        return Err(AppError::data("no data rows in input"));
    }

    let (profiles, summary) = build_profiles(&rows, ct_floor)?;

    let out = ctx.out_dir();
    let staging = Staging::new(&out)?;
    for p in &profiles {
        let name = format!("profile_{}.csv", sanitize_id(&p.patient_id));
        write_text(&staging.path().join(name), &p.to_csv())?;
    }
    write_text(&staging.path().join("summary.csv"), &summary_csv(&summary))?;
    staging.commit(&out)?;

    println!(
        "monitor: {} patient(s), {} row(s), pooled agreement {}",
        profiles.len(),
        rows.len(),
        summary.pooled_agreement.map(|a| format!("{a:.3}")).unwrap_or_else(|| "n/a".into())
    );
    Ok(())
}
