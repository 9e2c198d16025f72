//! Synthetic radiograph rendering and pneumonia-severity numerics.
//!
//! The crate covers the full desk-scale pipeline: CT volumes and synthetic
//! chest phantoms ([`volume`]), HU-threshold material decomposition and chest
//! isolation ([`materials`]), ray-cast DRR rendering with polychromatic
//! attenuation, scatter and Poisson noise ([`projector`]), 2-D localization
//! map algebra ([`mapalgebra`]), detection/localization evaluation metrics
//! ([`metrics`]), pneumonia-ratio severity scoring ([`severity`]) and
//! longitudinal trend analysis ([`monitor`]).
//!
//! Floating-point image types and the numeric kernels over them are generic
//! over the scalar type via [`scalar::Real`]; the aliases below pin the two
//! concrete instantiations used by the file formats (`f32`) and by tests and
//! high-precision paths (`f64`).

pub mod error;
pub mod mapalgebra;
pub mod materials;
pub mod metrics;
pub mod monitor;
pub mod projector;
pub mod scalar;
pub mod severity;
pub mod sidecar;
pub mod volume;

pub use error::{Error, Result};
pub use scalar::Real;

/// Heat map backed by `f32`, the element type of the stack file format.
pub type HeatMap32 = mapalgebra::HeatMap<f32>;
/// Heat map backed by `f64`.
pub type HeatMap64 = mapalgebra::HeatMap<f64>;
/// Radiograph backed by `f32`, the element type of the raw float format.
pub type Radiograph32 = projector::Radiograph<f32>;
/// Radiograph backed by `f64`.
pub type Radiograph64 = projector::Radiograph<f64>;
