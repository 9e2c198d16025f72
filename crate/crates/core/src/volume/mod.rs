//! CT volume data model and raw-file I/O.
//!
//! Volumes are dense 3-D grids of Hounsfield units with physical spacing,
//! stored x-fastest (`idx = x + nx·(y + ny·z)`). On disk a volume is a raw
//! little-endian `int16` payload plus a structured-text sidecar; voxel masks
//! use the same layout with `uint8` 0/1 samples.

mod phantom;

pub use phantom::{
    generate_phantom, Axis, Bed, BodySpec, Bone, BoneKind, Ellipsoid, Lesion, LungsSpec,
    PhantomSpec, BACKGROUND_HU,
};

use std::path::Path;

use crate::error::{Error, Result};
use crate::sidecar::{sidecar_path, Sidecar};

/// Grid geometry shared by a volume and its masks: dimensions in voxels,
/// spacing in mm, and the world position (mm) of voxel (0,0,0)'s center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    pub dims: (usize, usize, usize),
    pub spacing_mm: (f64, f64, f64),
    pub origin_mm: (f64, f64, f64),
}

impl Grid3 {
    pub fn new(
        dims: (usize, usize, usize),
        spacing_mm: (f64, f64, f64),
        origin_mm: (f64, f64, f64),
    ) -> Result<Self> {
        if dims.0 < 1 || dims.1 < 1 || dims.2 < 1 {
            return Err(Error::InvalidParam(format!("grid dims must be >= 1, got {dims:?}")));
        }
        if spacing_mm.0 <= 0.0 || spacing_mm.1 <= 0.0 || spacing_mm.2 <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "grid spacing must be positive, got {spacing_mm:?}"
            )));
        }
        Ok(Self { dims, spacing_mm, origin_mm })
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.dims.0 && y < self.dims.1 && z < self.dims.2);
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    /// World position (mm) of the center of voxel (x,y,z).
    #[inline]
    pub fn voxel_center_mm(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        [
            self.origin_mm.0 + x as f64 * self.spacing_mm.0,
            self.origin_mm.1 + y as f64 * self.spacing_mm.1,
            self.origin_mm.2 + z as f64 * self.spacing_mm.2,
        ]
    }

    /// Axis-aligned bounding box (mm) of the full voxel extent: faces sit half
    /// a voxel beyond the outermost voxel centers.
    pub fn bounds_mm(&self) -> ([f64; 3], [f64; 3]) {
        let lo = [
            self.origin_mm.0 - 0.5 * self.spacing_mm.0,
            self.origin_mm.1 - 0.5 * self.spacing_mm.1,
            self.origin_mm.2 - 0.5 * self.spacing_mm.2,
        ];
        let hi = [
            self.origin_mm.0 + (self.dims.0 as f64 - 0.5) * self.spacing_mm.0,
            self.origin_mm.1 + (self.dims.1 as f64 - 0.5) * self.spacing_mm.1,
            self.origin_mm.2 + (self.dims.2 as f64 - 0.5) * self.spacing_mm.2,
        ];
        (lo, hi)
    }

    /// World center (mm) of the full voxel extent.
    pub fn center_mm(&self) -> [f64; 3] {
        let (lo, hi) = self.bounds_mm();
        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])]
    }
}

/// Dense 3-D grid of Hounsfield units. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CtVolume {
    grid: Grid3,
    values: Vec<i16>,
}

impl CtVolume {
    pub fn new(grid: Grid3, values: Vec<i16>) -> Result<Self> {
        if values.len() != grid.voxel_count() {
            return Err(Error::SizeMismatch {
                expected: grid.voxel_count(),
                actual: values.len(),
                what: "volume sample count".into(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn filled(grid: Grid3, hu: i16) -> Self {
        let n = grid.voxel_count();
        Self { grid, values: vec![hu; n] }
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.grid.dims
    }

    pub fn values(&self) -> &[i16] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> i16 {
        self.values[self.grid.index(x, y, z)]
    }
}

/// Per-voxel binary occupancy paired with a volume of the same dims.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelMask {
    dims: (usize, usize, usize),
    bits: Vec<u8>,
}

impl VoxelMask {
    pub fn empty(dims: (usize, usize, usize)) -> Self {
        Self { dims, bits: vec![0; dims.0 * dims.1 * dims.2] }
    }

    /// Wraps an existing 0/1 buffer in x-fastest order; length must match.
    pub(crate) fn from_bits_unchecked(dims: (usize, usize, usize), bits: Vec<u8>) -> Self {
        debug_assert_eq!(bits.len(), dims.0 * dims.1 * dims.2);
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self { dims, bits }
    }

    pub fn from_fn(dims: (usize, usize, usize), mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(dims.0 * dims.1 * dims.2);
        for z in 0..dims.2 {
            for y in 0..dims.1 {
                for x in 0..dims.0 {
                    bits.push(f(x, y, z) as u8);
                }
            }
        }
        Self { dims, bits }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.dims.0 && y < self.dims.1 && z < self.dims.2);
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.index(x, y, z)] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.index(x, y, z);
        self.bits[i] = v as u8;
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Number of set voxels.
    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_subset_of(&self, other: &VoxelMask) -> bool {
        self.dims == other.dims && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a <= b)
    }
}

const DTYPE_VOLUME: &str = "int16le";
const DTYPE_MASK: &str = "uint8";

fn volume_sidecar(grid: Grid3, dtype: &str) -> Sidecar {
    let mut sc = Sidecar::new();
    sc.set("dims", format!("{} {} {}", grid.dims.0, grid.dims.1, grid.dims.2));
    sc.set_triple("spacing_mm", grid.spacing_mm);
    sc.set_triple("origin_mm", grid.origin_mm);
    sc.set("dtype", dtype);
    sc
}

fn grid_from_sidecar(sc: &Sidecar, path: &Path) -> Result<Grid3> {
    let dims = sc.require_usize_triple("dims")?;
    let spacing = sc.require_f64_triple("spacing_mm")?;
    let origin = sc.require_f64_triple("origin_mm")?;
    Grid3::new(dims, spacing, origin)
        .map_err(|e| Error::parse(Some(path.to_path_buf()), e.to_string()))
}

/// Writes `<name>.raw` (int16 LE, x-fastest) and its `<name>.meta` sidecar.
pub fn save_volume(v: &CtVolume, raw_path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(v.values.len() * 2);
    for &s in &v.values {
        bytes.extend_from_slice(&s.to_le_bytes());
    }
    std::fs::write(raw_path, bytes).map_err(|e| Error::io(raw_path, e))?;
    volume_sidecar(v.grid, DTYPE_VOLUME).save(&sidecar_path(raw_path))
}

/// Loads a volume written by [`save_volume`].
pub fn load_volume(raw_path: &Path) -> Result<CtVolume> {
    let sc = Sidecar::load(&sidecar_path(raw_path))?;
    let grid = grid_from_sidecar(&sc, raw_path)?;
    let dtype = sc.require("dtype")?;
    if dtype != DTYPE_VOLUME {
        return Err(Error::parse(
            Some(raw_path.to_path_buf()),
            format!("expected dtype {DTYPE_VOLUME}, got {dtype}"),
        ));
    }
    let bytes = std::fs::read(raw_path).map_err(|e| Error::io(raw_path, e))?;
    let expected = grid.voxel_count();
    if bytes.len() != expected * 2 {
        return Err(Error::SizeMismatch {
            expected: expected * 2,
            actual: bytes.len(),
            what: format!("raw payload bytes for {}", raw_path.display()),
        });
    }
    let values = bytes.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
    CtVolume::new(grid, values)
}

/// Writes a mask as `uint8` 0/1 raw plus sidecar, with the owning grid's geometry.
pub fn save_mask(m: &VoxelMask, grid: Grid3, raw_path: &Path) -> Result<()> {
    if m.dims != grid.dims {
        return Err(Error::DimMismatch {
            expected: grid.dims,
            actual: m.dims,
            what: "mask dims vs grid".into(),
        });
    }
    std::fs::write(raw_path, &m.bits).map_err(|e| Error::io(raw_path, e))?;
    volume_sidecar(grid, DTYPE_MASK).save(&sidecar_path(raw_path))
}

/// Loads a mask written by [`save_mask`], returning it with its grid.
pub fn load_mask(raw_path: &Path) -> Result<(VoxelMask, Grid3)> {
    let sc = Sidecar::load(&sidecar_path(raw_path))?;
    let grid = grid_from_sidecar(&sc, raw_path)?;
    let dtype = sc.require("dtype")?;
    if dtype != DTYPE_MASK {
        return Err(Error::parse(
            Some(raw_path.to_path_buf()),
            format!("expected dtype {DTYPE_MASK}, got {dtype}"),
        ));
    }
    let bits = std::fs::read(raw_path).map_err(|e| Error::io(raw_path, e))?;
    if bits.len() != grid.voxel_count() {
        return Err(Error::SizeMismatch {
            expected: grid.voxel_count(),
            actual: bits.len(),
            what: format!("mask payload bytes for {}", raw_path.display()),
        });
    }
    if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidData(format!(
            "mask {} holds value {bad}, expected 0/1",
            raw_path.display()
        )));
    }
    Ok((VoxelMask { dims: grid.dims, bits }, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn all_air_volume_round_trips() {
        let dir = tmp();
        let grid = Grid3::new((2, 2, 2), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        let v = CtVolume::filled(grid, -1000);
        let p = dir.path().join("v.raw");
        save_volume(&v, &p).unwrap();
        let back = load_volume(&p).unwrap();
        assert_eq!(back.values(), &[-1000i16; 8][..]);
        assert_eq!(back.grid(), grid);
    }

    #[test]
    fn extreme_hu_round_trips_exactly() {
        let dir = tmp();
        let grid = Grid3::new((2, 1, 1), (0.5, 0.5, 0.5), (-1.0, 0.0, 0.0)).unwrap();
        let v = CtVolume::new(grid, vec![-1024, 3071]).unwrap();
        let p = dir.path().join("v.raw");
        save_volume(&v, &p).unwrap();
        assert_eq!(load_volume(&p).unwrap().values(), &[-1024, 3071][..]);
    }

    #[test]
    fn truncated_payload_is_a_size_mismatch() {
        let dir = tmp();
        let grid = Grid3::new((64, 64, 64), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        let n = grid.voxel_count();
        // Sidecar declares 64^3 samples but the payload holds one fewer.
        let p = dir.path().join("v.raw");
        std::fs::write(&p, vec![0u8; (n - 1) * 2]).unwrap();
        volume_sidecar(grid, DTYPE_VOLUME).save(&sidecar_path(&p)).unwrap();
        match load_volume(&p) {
            Err(Error::SizeMismatch { expected, actual, .. }) => {
                assert_eq!(expected, n * 2);
                assert_eq!(actual, (n - 1) * 2);
            }
            other => panic!("expected size mismatch, got {other:?}"),
        }
    }

    #[test]
    fn non_positive_spacing_is_rejected() {
        assert!(Grid3::new((2, 2, 2), (1.0, 0.0, 1.0), (0.0, 0.0, 0.0)).is_err());
        let dir = tmp();
        let p = dir.path().join("v.raw");
        std::fs::write(&p, vec![0u8; 16]).unwrap();
        let mut sc = Sidecar::new();
        sc.set("dims", "2 2 2");
        sc.set("spacing_mm", "1 -1 1");
        sc.set("origin_mm", "0 0 0");
        sc.set("dtype", DTYPE_VOLUME);
        sc.save(&sidecar_path(&p)).unwrap();
        assert!(load_volume(&p).is_err());
    }

    #[test]
    fn random_volume_round_trips_bit_exact() {
        let dir = tmp();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let grid = Grid3::new((16, 16, 16), (0.7, 1.1, 1.3), (-5.0, 2.0, 0.25)).unwrap();
        let values: Vec<i16> = (0..grid.voxel_count()).map(|_| rng.gen_range(-1024..=3071)).collect();
        let v = CtVolume::new(grid, values).unwrap();
        let p = dir.path().join("v.raw");
        save_volume(&v, &p).unwrap();
        assert_eq!(load_volume(&p).unwrap(), v);
    }

    #[test]
    fn mask_round_trips_and_rejects_stray_values() {
        let dir = tmp();
        let grid = Grid3::new((3, 2, 2), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        let m = VoxelMask::from_fn(grid.dims, |x, y, z| (x + y + z) % 2 == 0);
        let p = dir.path().join("m.mask.raw");
        save_mask(&m, grid, &p).unwrap();
        let (back, g) = load_mask(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(g, grid);

        let mut bytes = std::fs::read(&p).unwrap();
        bytes[0] = 7;
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(load_mask(&p), Err(Error::InvalidData(_))));
    }

    #[test]
    fn voxel_centers_and_bounds_follow_the_grid() {
        let grid = Grid3::new((4, 3, 2), (2.0, 1.0, 0.5), (10.0, -1.0, 0.0)).unwrap();
        assert_eq!(grid.voxel_center_mm(0, 0, 0), [10.0, -1.0, 0.0]);
        assert_eq!(grid.voxel_center_mm(3, 2, 1), [16.0, 1.0, 0.5]);
        let (lo, hi) = grid.bounds_mm();
        assert_eq!(lo, [9.0, -1.5, -0.25]);
        assert_eq!(hi, [17.0, 1.5, 0.75]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        // Round-trip is the identity on arbitrary small volumes.
        #[test]
        fn save_then_load_is_identity(
            nx in 1usize..6, ny in 1usize..6, nz in 1usize..6,
            seed in any::<u64>(),
        ) {
            let dir = tmp();
            let grid = Grid3::new((nx, ny, nz), (1.0, 2.0, 0.5), (-3.0, 0.0, 4.5)).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<i16> = (0..grid.voxel_count()).map(|_| rng.gen()).collect();
            let v = CtVolume::new(grid, values).unwrap();
            let p = dir.path().join("v.raw");
            save_volume(&v, &p).unwrap();
            prop_assert_eq!(load_volume(&p).unwrap(), v);
        }
    }
}
