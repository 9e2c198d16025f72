//! DRR rendering: project decomposed CT volumes onto a detector plane.
//!
//! The pipeline is ray-cast per-material path lengths → polychromatic
//! Beer–Lambert attenuation → optional kernel scatter estimate → optional
//! Poisson noise → 8-bit post-processing (invert, quantize, conditional gamma).
//! Projection parallelizes over detector rows and is bit-identical for any
//! worker count: inputs are read-only, every pixel is independent, and noise
//! seeds are derived per pixel from (seed, pixel index).

mod raycast;
mod tables;

pub use raycast::{clip_to_bounds, trace_ray, traverse};
pub use tables::{AttenuationTable, Spectrum};

use rand::SeedableRng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mapalgebra::{gaussian_kernel_1d, convolve_separable, BinaryMask2D, Boundary, Gray8};
use crate::materials::{Material, MaterialMasks};
use crate::scalar::Real;
use crate::sidecar::{sidecar_path, Sidecar};
use crate::volume::{Grid3, VoxelMask};

/// Beam shape: parallel rays, or a cone from a point source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamMode {
    Parallel,
    /// Point source; distances from source to detector plane and to the
    /// isocenter (volume center), in mm.
    Cone { sdd_mm: f64, sad_mm: f64 },
}

/// Projection direction through the patient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Pa,
    Ap,
}

/// Typical chest-stand distances used when cone geometry is not specified.
pub const DEFAULT_SDD_MM: f64 = 1800.0;
pub const DEFAULT_SAD_MM: f64 = 1500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGeometry {
    pub width: usize,
    pub height: usize,
    pub pixel_mm: f64,
    pub mode: BeamMode,
    pub view: View,
}

impl DetectorGeometry {
    pub fn parallel(width: usize, height: usize, pixel_mm: f64, view: View) -> Self {
        Self { width, height, pixel_mm, mode: BeamMode::Parallel, view }
    }

    pub fn cone(width: usize, height: usize, pixel_mm: f64, view: View) -> Self {
        Self {
            width,
            height,
            pixel_mm,
            mode: BeamMode::Cone { sdd_mm: DEFAULT_SDD_MM, sad_mm: DEFAULT_SAD_MM },
            view,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 1 || self.height < 1 {
            return Err(Error::InvalidParam("detector must be at least 1×1 pixels".into()));
        }
        if self.pixel_mm <= 0.0 {
            return Err(Error::InvalidParam("pixel size must be positive".into()));
        }
        if let BeamMode::Cone { sdd_mm, sad_mm } = self.mode {
            if !(0.0 < sad_mm && sad_mm < sdd_mm) {
                return Err(Error::InvalidParam(format!(
                    "cone geometry needs 0 < SAD < SDD, got SAD {sad_mm}, SDD {sdd_mm}"
                )));
            }
        }
        Ok(())
    }
}

/// Detector-plane intensity image (energy-weighted signal, arbitrary
/// consistent units).
#[derive(Debug, Clone, PartialEq)]
pub struct Radiograph<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
    geometry: DetectorGeometry,
}

impl<T: Real> Radiograph<T> {
    pub fn new(geometry: DetectorGeometry, values: Vec<T>) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.width * geometry.height {
            return Err(Error::SizeMismatch {
                expected: geometry.width * geometry.height,
                actual: values.len(),
                what: "radiograph pixel count".into(),
            });
        }
        Ok(Self { width: geometry.width, height: geometry.height, values, geometry })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn geometry(&self) -> &DetectorGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }
}

/// World-space ray for one detector pixel. The beam axis is world y; image
/// rows run down world z; image columns run along +x for PA and −x for AP,
/// which makes the two views horizontal mirrors of each other.
fn pixel_ray(det: &DetectorGeometry, grid: &Grid3, u: usize, v: usize) -> ([f64; 3], [f64; 3]) {
    let c = grid.center_mm();
    let su = match det.view {
        View::Pa => 1.0,
        View::Ap => -1.0,
    };
    let x = c[0] + su * (u as f64 - (det.width as f64 - 1.0) / 2.0) * det.pixel_mm;
    let z = c[2] + ((det.height as f64 - 1.0) / 2.0 - v as f64) * det.pixel_mm;
    let sy = match det.view {
        View::Pa => 1.0,  // source posterior (−y), beam travels +y
        View::Ap => -1.0, // source anterior (+y), beam travels −y
    };
    match det.mode {
        BeamMode::Parallel => {
            let (lo, hi) = grid.bounds_mm();
            let y0 = if sy > 0.0 { lo[1] - 1.0 } else { hi[1] + 1.0 };
            ([x, y0, z], [0.0, sy, 0.0])
        }
        BeamMode::Cone { sdd_mm, sad_mm } => {
            let source = [c[0], c[1] - sy * sad_mm, c[2]];
            let pixel = [x, c[1] + sy * (sdd_mm - sad_mm), z];
            let d = [pixel[0] - source[0], pixel[1] - source[1], pixel[2] - source[2]];
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            (source, [d[0] / n, d[1] / n, d[2] / n])
        }
    }
}

/// Noiseless, scatterless forward projection:
/// `I(pixel) = Σ_E photons(E)·E·exp(−Σ_m μ/ρ(m,E)·ρ_m·ℓ_m)`.
pub fn project<T: Real>(
    masks: &MaterialMasks,
    grid: &Grid3,
    det: &DetectorGeometry,
    spectrum: &Spectrum,
    att: &AttenuationTable,
) -> Result<Radiograph<T>> {
    det.validate()?;
    // Per spectrum bin: energy-weighted photon count and the three linear
    // attenuation coefficients (1/cm). Interpolation errors surface here.
    let mut bins = Vec::with_capacity(spectrum.bins().len());
    for &(e, n) in spectrum.bins() {
        let mu = [
            att.mu_linear(Material::Air, e)?,
            att.mu_linear(Material::Soft, e)?,
            att.mu_linear(Material::Bone, e)?,
        ];
        bins.push((n * e, mu));
    }

    let (w, h) = (det.width, det.height);
    let mut values = vec![T::zero(); w * h];
    values.par_chunks_exact_mut(w).enumerate().for_each(|(row, out)| {
        for (u, slot) in out.iter_mut().enumerate() {
            let (origin, dir) = pixel_ray(det, grid, u, row);
            let path_cm = trace_ray(masks, grid, origin, dir);
            let mut intensity = 0.0f64;
            for (weight, mu) in &bins {
                let depth = mu[0] * path_cm[0] + mu[1] * path_cm[1] + mu[2] * path_cm[2];
                intensity += weight * (-depth).exp();
            }
            *slot = T::of(intensity);
        }
    });
    Radiograph::new(*det, values)
}

/// Binary silhouette of a voxel mask: a pixel is set iff its ray crosses at
/// least one set voxel.
pub fn project_mask(mask: &VoxelMask, grid: &Grid3, det: &DetectorGeometry) -> Result<BinaryMask2D> {
    det.validate()?;
    if mask.dims() != grid.dims {
        return Err(Error::DimMismatch {
            expected: grid.dims,
            actual: mask.dims(),
            what: "mask dims vs grid".into(),
        });
    }
    let (w, h) = (det.width, det.height);
    let (nx, ny, _) = grid.dims;
    let bits = mask.bits();
    let mut out = vec![0u8; w * h];
    out.par_chunks_exact_mut(w).enumerate().for_each(|(row, line)| {
        for (u, slot) in line.iter_mut().enumerate() {
            let (origin, dir) = pixel_ray(det, grid, u, row);
            let mut len = 0.0f64;
            traverse(grid, origin, dir, |x, y, z, seg| {
                if bits[x + nx * (y + ny * z)] != 0 {
                    len += seg;
                }
            });
            *slot = (len > 0.0) as u8;
        }
    });
    BinaryMask2D::from_bits(w, h, out)
}

/// Kernel scatter model: `fraction` of a wide-Gaussian-blurred copy of the
/// primary image, returned separately so callers add it when wanted. The
/// kernel is normalized and zero-padded at the boundary, so total scatter
/// energy never exceeds `fraction` times total primary energy.
pub fn estimate_scatter<T: Real>(
    primary: &Radiograph<T>,
    fraction: f64,
    sigma_px: f64,
) -> Result<Radiograph<T>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParam(format!("scatter fraction must be in [0,1), got {fraction}")));
    }
    if sigma_px < 1.0 {
        return Err(Error::InvalidParam(format!("scatter kernel width must be >= 1 px, got {sigma_px}")));
    }
    let kernel = gaussian_kernel_1d(sigma_px);
    let blurred = convolve_separable(primary.values(), primary.width, primary.height, &kernel, Boundary::ZeroPad);
    let f = T::of(fraction);
    let values = blurred.into_iter().map(|v| v * f).collect();
    Radiograph::new(primary.geometry, values)
}

/// SplitMix64 finalizer over (seed, index): a distinct, well-mixed stream
/// seed per pixel, independent of traversal order.
fn pixel_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Quantum noise: each pixel's expected photon count (its share of the
/// spectrum total) is replaced by a Poisson draw and rescaled to intensity
/// units. Deterministic for a given seed regardless of thread count.
pub fn add_noise<T: Real>(img: &Radiograph<T>, spectrum: &Spectrum, seed: u64) -> Result<Radiograph<T>> {
    let n_total = spectrum.total_photons();
    let i0 = spectrum.unattenuated_intensity();
    if let Some(bad) = img.values().iter().find(|v| **v < T::zero()) {
        return Err(Error::InvalidData(format!("negative intensity {bad:?} cannot carry noise")));
    }
    let per_count = i0 / n_total; // intensity units per photon
    let mut values = vec![T::zero(); img.values().len()];
    let w = img.width;
    values.par_chunks_exact_mut(w).enumerate().for_each(|(row, out)| {
        for (u, slot) in out.iter_mut().enumerate() {
            let idx = row * w + u;
            let v = img.values()[idx].to_f64().unwrap();
            let lambda = v / per_count;
            if lambda > 0.0 {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(pixel_seed(seed, idx as u64));
                let counts: f64 = Poisson::new(lambda).expect("positive finite lambda").sample(&mut rng);
                *slot = T::of(counts * per_count);
            }
        }
    });
    Radiograph::new(img.geometry, values)
}

/// Threshold above which the inverted 8-bit image is considered washed out
/// and gets gamma-corrected.
pub const POST_MEAN_GATE: f64 = 220.0;
pub const POST_GAMMA: f64 = 0.2;

/// Inverts (bright = more attenuation), min-max scales to 8 bits, then
/// applies gamma 0.2 when the 8-bit mean exceeds 220. A constant input maps
/// to mid-gray 128.
pub fn postprocess<T: Real>(img: &Radiograph<T>) -> Gray8 {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in img.values() {
        let v = v.to_f64().unwrap();
        min = min.min(v);
        max = max.max(v);
    }
    let data: Vec<u8> = if max > min {
        let span = max - min;
        img.values()
            .iter()
            .map(|v| ((max - v.to_f64().unwrap()) / span * 255.0).round() as u8)
            .collect()
    } else {
        vec![128; img.values().len()]
    };
    let mut out = Gray8::new(img.width, img.height, data).expect("sizes match");
    if out.mean() > POST_MEAN_GATE {
        let lut: Vec<u8> = (0..=255u16)
            .map(|v| (255.0 * (v as f64 / 255.0).powf(POST_GAMMA)).round() as u8)
            .collect();
        out.apply_lut(&lut);
    }
    out
}

/// Writes the float radiograph as raw little-endian f32 plus sidecar
/// (width, height, dtype).
pub fn save_radiograph_raw<T: Real>(img: &Radiograph<T>, raw_path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(img.values.len() * 4);
    for v in &img.values {
        bytes.extend_from_slice(&(v.to_f64().unwrap() as f32).to_le_bytes());
    }
    std::fs::write(raw_path, bytes).map_err(|e| Error::io(raw_path, e))?;
    let mut sc = Sidecar::new();
    sc.set("width", img.width);
    sc.set("height", img.height);
    sc.set("dtype", "float32le");
    sc.save(&sidecar_path(raw_path))
}

/// Reads a raw f32 radiograph back as (width, height, samples).
pub fn load_radiograph_raw(raw_path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let sc = Sidecar::load(&sidecar_path(raw_path))?;
    let w = sc.require_usize("width")?;
    let h = sc.require_usize("height")?;
    let dtype = sc.require("dtype")?;
    if dtype != "float32le" {
        return Err(Error::parse(
            Some(raw_path.to_path_buf()),
            format!("expected dtype float32le, got {dtype}"),
        ));
    }
    let bytes = std::fs::read(raw_path).map_err(|e| Error::io(raw_path, e))?;
    if bytes.len() != w * h * 4 {
        return Err(Error::SizeMismatch {
            expected: w * h * 4,
            actual: bytes.len(),
            what: format!("radiograph payload bytes for {}", raw_path.display()),
        });
    }
    let vals = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok((w, h, vals))
}
