//! Flat `key = value` run configuration.
//!
//! Precedence is command-line flag, then config file, then built-in default.
//! The format is deliberately plain text — no sections, no types — so a run
//! can be reproduced bit-for-bit from the file alone plus the recorded seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use radkit_core::projector::{View, DEFAULT_SAD_MM, DEFAULT_SDD_MM};

use crate::errors::{AppError, AppResult};

/// Keys a config file may set. Anything else is rejected so a typo cannot
/// silently fall back to a default.
const KNOWN_KEYS: &[&str] = &[
    // global
    "out",
    "seed",
    "threads",
    // input paths
    "volume",
    "lungs_mask",
    "lesion_mask",
    "stack",
    "image",
    "phantom_spec",
    "spectrum",
    "attenuation",
    // projector settings
    "detector_width",
    "detector_height",
    "pixel_mm",
    "beam",
    "sdd_mm",
    "sad_mm",
    "views",
    "scatter",
    "scatter_fraction",
    "scatter_sigma_px",
    "noise",
    // material thresholds
    "air_max_hu",
    "bone_min_hu",
    // scoring thresholds and identifiers
    "localization_threshold",
    "proposal_threshold",
    "detection_threshold",
    "patient_id",
    "time",
    "detection_score",
    // phantom / monitor extras
    "times",
    "ct_floor",
];

/// Parsed config file: raw strings, typed on lookup.
#[derive(Debug, Default)]
pub struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::data(format!("config {}: {e}", path.display())))?;
        Self::parse_str(&text).map_err(|msg| AppError::data(format!("config {}: {msg}", path.display())))
    }

    pub fn parse_str(text: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(format!("line {}: unknown key `{key}`", lineno + 1));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(format!("line {}: duplicate key `{key}`", lineno + 1));
            }
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(KNOWN_KEYS.contains(&key), "lookup of unregistered key {key}");
        self.map.get(key).map(String::as_str)
    }

    /// Path-valued setting; the flag wins over the file.
    pub fn path(&self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        flag.or_else(|| self.raw(key).map(PathBuf::from))
    }

    /// String-valued setting with a default.
    pub fn string(&self, key: &str, flag: Option<String>, default: &str) -> String {
        flag.or_else(|| self.raw(key).map(str::to_string)).unwrap_or_else(|| default.to_string())
    }

    /// Numeric (or other `FromStr`) setting with a default.
    pub fn value<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> AppResult<T> {
        match self.opt_value(key, flag)? {
            Some(v) => Ok(v),
            None => Ok(default),
        }
    }

    /// Numeric setting that may be absent entirely.
    pub fn opt_value<T: FromStr>(&self, key: &str, flag: Option<T>) -> AppResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| AppError::data(format!("config key `{key}`: cannot parse `{s}`"))),
        }
    }

    /// On/off setting. Accepts `on|off|true|false|1|0` in the file.
    pub fn switch(&self, key: &str, flag: Option<Switch>, default: bool) -> AppResult<bool> {
        if let Some(s) = flag {
            return Ok(s.is_on());
        }
        match self.raw(key) {
            None => Ok(default),
            Some(s) => match s {
                "on" | "true" | "1" => Ok(true),
                "off" | "false" | "0" => Ok(false),
                other => Err(AppError::data(format!("config key `{key}`: expected on/off, got `{other}`"))),
            },
        }
    }
}

/// Explicit two-state flag value, so a config-file `on` can be overridden
/// back to `off` from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn is_on(self) -> bool {
        matches!(self, Switch::On)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BeamArg {
    Parallel,
    Cone,
}

impl FromStr for BeamArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel" => Ok(BeamArg::Parallel),
            "cone" => Ok(BeamArg::Cone),
            other => Err(format!("expected parallel or cone, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewsArg {
    Pa,
    Ap,
    Both,
}

impl ViewsArg {
    pub fn views(self) -> &'static [View] {
        match self {
            ViewsArg::Pa => &[View::Pa],
            ViewsArg::Ap => &[View::Ap],
            ViewsArg::Both => &[View::Pa, View::Ap],
        }
    }
}

impl FromStr for ViewsArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pa" => Ok(ViewsArg::Pa),
            "ap" => Ok(ViewsArg::Ap),
            "both" => Ok(ViewsArg::Both),
            other => Err(format!("expected pa, ap, or both, got `{other}`")),
        }
    }
}

/// Settings shared by every subcommand, resolved from the global flags and
/// the config file.
pub struct Ctx {
    pub file: FileConfig,
    seed_flag: Option<u64>,
    out_flag: Option<PathBuf>,
}

impl Ctx {
    pub fn new(file: FileConfig, seed_flag: Option<u64>, out_flag: Option<PathBuf>) -> Self {
        Self { file, seed_flag, out_flag }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.file.path("out", self.out_flag.clone()).unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn seed(&self) -> AppResult<u64> {
        self.file.value("seed", self.seed_flag, 0u64)
    }

    /// Validates a probability-like threshold early, as a usage error.
    pub fn unit_threshold(&self, key: &str, flag: Option<f64>, default: f64) -> AppResult<f64> {
        let v = self.file.value(key, flag, default)?;
        if !(0.0..=1.0).contains(&v) || !v.is_finite() {
            return Err(AppError::usage(format!("{key} must be in [0, 1], got {v}")));
        }
        Ok(v)
    }
}

/// Default values shared between commands and documented in `--help`.
pub const DEFAULT_DETECTOR: (usize, usize) = (256, 256);
pub const DEFAULT_PIXEL_MM: f64 = 1.6;
pub const DEFAULT_SCATTER_FRACTION: f64 = 0.1;
pub const DEFAULT_SCATTER_SIGMA_PX: f64 = 12.0;
pub const DEFAULT_DETECTION_THRESHOLD: f64 = 0.62;

/// Geometry defaults re-exported so the drr command and its tests agree.
pub const DEFAULT_CONE: (f64, f64) = (DEFAULT_SDD_MM, DEFAULT_SAD_MM);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_spacing() {
        let c = FileConfig::parse_str("# hello\n\n  seed = 7\nout=results\n").unwrap();
        assert_eq!(c.value("seed", None, 0u64).unwrap(), 7);
        assert_eq!(c.path("out", None), Some(PathBuf::from("results")));
    }

    #[test]
    fn flag_overrides_file_overrides_default() {
        let c = FileConfig::parse_str("seed = 7\n").unwrap();
        assert_eq!(c.value("seed", Some(9u64), 0).unwrap(), 9);
        assert_eq!(c.value("seed", None, 0u64).unwrap(), 7);
        let empty = FileConfig::empty();
        assert_eq!(empty.value("seed", None, 3u64).unwrap(), 3);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(FileConfig::parse_str("sede = 7\n").is_err());
        assert!(FileConfig::parse_str("seed = 7\nseed = 8\n").is_err());
        assert!(FileConfig::parse_str("just a line\n").is_err());
    }

    #[test]
    fn switch_accepts_both_spellings() {
        let c = FileConfig::parse_str("noise = on\nscatter = false\n").unwrap();
        assert!(c.switch("noise", None, false).unwrap());
        assert!(!c.switch("scatter", None, true).unwrap());
        // A flag overrides the file in both directions.
        assert!(!c.switch("noise", Some(Switch::Off), true).unwrap());
    }

    #[test]
    fn threshold_validation_flags_bad_ranges_as_usage() {
        let ctx = Ctx::new(FileConfig::empty(), None, None);
        assert!(ctx.unit_threshold("detection_threshold", Some(1.5), 0.62).is_err());
        assert_eq!(ctx.unit_threshold("detection_threshold", None, 0.62).unwrap(), 0.62);
    }
}
