//! Tables compiled into the binary so a bare `radkit drr` works without any
//! sidecar data files; `--spectrum` / `--attenuation` substitute custom ones.

use radkit_core::projector::{AttenuationTable, Spectrum};

use crate::errors::{AppResult, StageContext};

/// 120 kVp, 4.3 mm Al-equivalent filtration, 10 keV bins, 1e5 photons/pixel.
pub const SPECTRUM_TSV: &str = include_str!("../data/spectrum_120kv_4p3al.tsv");

/// NIST-derived mass attenuation for air / soft tissue / cortical bone.
pub const ATTENUATION_TSV: &str = include_str!("../data/attenuation_nist.tsv");

pub fn load_spectrum(path: Option<&std::path::Path>) -> AppResult<Spectrum> {
    match path {
        Some(p) => Spectrum::load(p).stage("load-spectrum"),
        None => Spectrum::from_tsv_str(SPECTRUM_TSV, None).stage("load-spectrum"),
    }
}

pub fn load_attenuation(path: Option<&std::path::Path>) -> AppResult<AttenuationTable> {
    match path {
        Some(p) => AttenuationTable::load(p).stage("load-attenuation"),
        None => AttenuationTable::from_tsv_str(ATTENUATION_TSV, None).stage("load-attenuation"),
    }
}
