//! Material decomposition by HU thresholds and chest isolation.
//!
//! Voxels are split into air / soft tissue / bone bands. The chest region is
//! everything that is not exterior air: the non-air mask is hole-filled by an
//! exterior flood through the air complement, then reduced to its largest
//! 6-connected component so detached objects (a bed slab, calibration gear)
//! drop out before projection.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::volume::{CtVolume, VoxelMask};

/// The three attenuation materials, in mask order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Material {
    Air = 0,
    Soft = 1,
    Bone = 2,
}

impl Material {
    pub const ALL: [Material; 3] = [Material::Air, Material::Soft, Material::Bone];

    pub fn name(self) -> &'static str {
        match self {
            Material::Air => "air",
            Material::Soft => "soft",
            Material::Bone => "bone",
        }
    }
}

/// Default HU band edges: at or below `AIR_MAX_HU` is air, at or above
/// `BONE_MIN_HU` is bone, soft tissue between.
pub const AIR_MAX_HU: i16 = -500;
pub const BONE_MIN_HU: i16 = 300;

/// One binary mask per material; the three masks partition the volume.
#[derive(Debug, Clone)]
pub struct MaterialMasks {
    pub air: VoxelMask,
    pub soft: VoxelMask,
    pub bone: VoxelMask,
}

impl MaterialMasks {
    pub fn dims(&self) -> (usize, usize, usize) {
        self.air.dims()
    }

    pub fn mask(&self, m: Material) -> &VoxelMask {
        match m {
            Material::Air => &self.air,
            Material::Soft => &self.soft,
            Material::Bone => &self.bone,
        }
    }
}

/// Splits a volume into air/soft/bone masks by HU thresholds.
pub fn decompose(v: &CtVolume, air_max: i16, bone_min: i16) -> Result<MaterialMasks> {
    if air_max >= bone_min {
        return Err(Error::InvalidParam(format!(
            "material thresholds must satisfy air_max < bone_min, got {air_max} >= {bone_min}"
        )));
    }
    let dims = v.dims();
    let n = v.values().len();
    let mut air = vec![0u8; n];
    let mut soft = vec![0u8; n];
    let mut bone = vec![0u8; n];
    for (i, &hu) in v.values().iter().enumerate() {
        if hu <= air_max {
            air[i] = 1;
        } else if hu >= bone_min {
            bone[i] = 1;
        } else {
            soft[i] = 1;
        }
    }
    Ok(MaterialMasks {
        air: VoxelMask::from_bits_unchecked(dims, air),
        soft: VoxelMask::from_bits_unchecked(dims, soft),
        bone: VoxelMask::from_bits_unchecked(dims, bone),
    })
}

const NEIGHBORS6: [(isize, isize, isize); 6] =
    [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)];

/// Fills interior cavities: flood the complement of `m` inward from the volume
/// boundary (6-connectivity); complement voxels the flood never reaches are
/// enclosed by `m` and become part of the result. Always a superset of `m`.
pub fn fill_holes(m: &VoxelMask) -> VoxelMask {
    let (nx, ny, nz) = m.dims();
    let mut outside = vec![false; nx * ny * nz];
    let mut queue = VecDeque::new();
    let try_seed = |x: usize, y: usize, z: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize, usize)>| {
        let i = x + nx * (y + ny * z);
        if !outside[i] && !m.get(x, y, z) {
            outside[i] = true;
            queue.push_back((x, y, z));
        }
    };
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1 {
                    try_seed(x, y, z, &mut outside, &mut queue);
                }
            }
        }
    }
    while let Some((x, y, z)) = queue.pop_front() {
        for (dx, dy, dz) in NEIGHBORS6 {
            let (qx, qy, qz) = (x as isize + dx, y as isize + dy, z as isize + dz);
            if qx < 0 || qy < 0 || qz < 0 || qx >= nx as isize || qy >= ny as isize || qz >= nz as isize
            {
                continue;
            }
            let (qx, qy, qz) = (qx as usize, qy as usize, qz as usize);
            let i = qx + nx * (qy + ny * qz);
            if !outside[i] && !m.get(qx, qy, qz) {
                outside[i] = true;
                queue.push_back((qx, qy, qz));
            }
        }
    }
    VoxelMask::from_fn((nx, ny, nz), |x, y, z| !outside[x + nx * (y + ny * z)])
}

/// Largest 6-connected component of a mask; empty input stays empty.
pub fn largest_component6(m: &VoxelMask) -> VoxelMask {
    let (nx, ny, nz) = m.dims();
    let n = nx * ny * nz;
    let mut label = vec![0u32; n]; // 0 = unvisited or clear
    let mut best_label = 0u32;
    let mut best_size = 0usize;
    let mut next = 1u32;
    let mut queue = VecDeque::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * (y + ny * z);
                if !m.get(x, y, z) || label[i] != 0 {
                    continue;
                }
                let lab = next;
                next += 1;
                label[i] = lab;
                queue.push_back((x, y, z));
                let mut size = 0usize;
                while let Some((cx, cy, cz)) = queue.pop_front() {
                    size += 1;
                    for (dx, dy, dz) in NEIGHBORS6 {
                        let (qx, qy, qz) = (cx as isize + dx, cy as isize + dy, cz as isize + dz);
                        if qx < 0
                            || qy < 0
                            || qz < 0
                            || qx >= nx as isize
                            || qy >= ny as isize
                            || qz >= nz as isize
                        {
                            continue;
                        }
                        let (qx, qy, qz) = (qx as usize, qy as usize, qz as usize);
                        let j = qx + nx * (qy + ny * qz);
                        if m.get(qx, qy, qz) && label[j] == 0 {
                            label[j] = lab;
                            queue.push_back((qx, qy, qz));
                        }
                    }
                }
                if size > best_size {
                    best_size = size;
                    best_label = lab;
                }
            }
        }
    }
    VoxelMask::from_fn((nx, ny, nz), |x, y, z| {
        best_label != 0 && label[x + nx * (y + ny * z)] == best_label
    })
}

/// Body region for projection: hole-filled non-air, reduced to its largest
/// 6-connected component.
pub fn chest_mask(m: &MaterialMasks) -> VoxelMask {
    let dims = m.dims();
    let not_air = VoxelMask::from_fn(dims, |x, y, z| !m.air.get(x, y, z));
    largest_component6(&fill_holes(&not_air))
}

/// Keeps voxels inside `chest` and resets the rest to air (−1000 HU).
pub fn apply_chest_mask(v: &CtVolume, chest: &VoxelMask) -> Result<CtVolume> {
    if chest.dims() != v.dims() {
        return Err(Error::DimMismatch {
            expected: v.dims(),
            actual: chest.dims(),
            what: "chest mask dims vs volume".into(),
        });
    }
    let values = v
        .values()
        .iter()
        .zip(chest.bits())
        .map(|(&hu, &inside)| if inside != 0 { hu } else { -1000 })
        .collect();
    CtVolume::new(v.grid(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{generate_phantom, Bed, BodySpec, Ellipsoid, Grid3, LungsSpec, PhantomSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn grid(n: usize) -> Grid3 {
        Grid3::new((n, n, n), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn uniform_air_volume_is_all_air() {
        let v = CtVolume::filled(grid(3), -1000);
        let m = decompose(&v, AIR_MAX_HU, BONE_MIN_HU).unwrap();
        assert_eq!(m.air.count(), 27);
        assert_eq!(m.soft.count(), 0);
        assert_eq!(m.bone.count(), 0);
    }

    #[test]
    fn one_voxel_per_band() {
        let g = Grid3::new((3, 1, 1), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        let v = CtVolume::new(g, vec![-1000, 0, 700]).unwrap();
        let m = decompose(&v, -500, 300).unwrap();
        assert!(m.air.get(0, 0, 0) && m.soft.get(1, 0, 0) && m.bone.get(2, 0, 0));
    }

    #[test]
    fn threshold_ordering_violation_is_rejected() {
        let v = CtVolume::filled(grid(2), 0);
        assert!(decompose(&v, 300, -500).is_err());
        assert!(decompose(&v, 300, 300).is_err());
    }

    #[test]
    fn decomposition_partitions_every_voxel() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = grid(12);
        let values: Vec<i16> = (0..g.voxel_count()).map(|_| rng.gen_range(-1024..=3071)).collect();
        let v = CtVolume::new(g, values).unwrap();
        let m = decompose(&v, AIR_MAX_HU, BONE_MIN_HU).unwrap();
        for z in 0..12 {
            for y in 0..12 {
                for x in 0..12 {
                    let memberships =
                        m.air.get(x, y, z) as u8 + m.soft.get(x, y, z) as u8 + m.bone.get(x, y, z) as u8;
                    assert_eq!(memberships, 1, "voxel ({x},{y},{z})");
                }
            }
        }
    }

    #[test]
    fn all_air_volume_has_empty_chest() {
        let v = CtVolume::filled(grid(5), -1000);
        let m = decompose(&v, AIR_MAX_HU, BONE_MIN_HU).unwrap();
        assert_eq!(chest_mask(&m).count(), 0);
    }

    /// Phantom with lungs (−800 HU, i.e. air band) and a detached bed slab.
    fn bed_phantom() -> PhantomSpec {
        PhantomSpec {
            dims: [48, 48, 48],
            spacing_mm: [1.0, 1.0, 1.0],
            origin_mm: None,
            time_points: 1,
            body: BodySpec { center_mm: [0.0, 0.0, 0.0], radii_mm: [20.0, 16.0, 21.0], hu: 40 },
            lungs: LungsSpec {
                left: Ellipsoid { center_mm: [-9.0, 0.0, 0.0], radii_mm: [7.0, 9.0, 13.0] },
                right: Ellipsoid { center_mm: [9.0, 0.0, 0.0], radii_mm: [7.0, 9.0, 13.0] },
                hu: -800,
            },
            bones: vec![],
            lesions: vec![],
            bed: Some(Bed { min_mm: [-22.0, 18.0, -22.0], max_mm: [22.0, 21.0, 22.0], hu: 60 }),
        }
    }

    #[test]
    fn chest_mask_fills_lung_cavities_and_drops_the_bed() {
        let spec = bed_phantom();
        let (v, lungs, _) = generate_phantom(&spec, 0).unwrap();
        let m = decompose(&v, AIR_MAX_HU, BONE_MIN_HU).unwrap();
        let chest = chest_mask(&m);

        // Chest equals the ground-truth body ellipsoid occupancy: lung
        // cavities filled back in, bed slab dropped as a smaller component.
        let g = v.grid();
        let body = Ellipsoid { center_mm: spec.body.center_mm, radii_mm: spec.body.radii_mm };
        let expected = VoxelMask::from_fn(g.dims, |x, y, z| body.contains(g.voxel_center_mm(x, y, z)));
        assert_eq!(chest, expected);
        assert!(lungs.is_subset_of(&chest));
    }

    #[test]
    fn apply_chest_mask_blanks_the_bed_and_keeps_the_body() {
        let spec = bed_phantom();
        let (v, _, _) = generate_phantom(&spec, 0).unwrap();
        let m = decompose(&v, AIR_MAX_HU, BONE_MIN_HU).unwrap();
        let chest = chest_mask(&m);
        let cleaned = apply_chest_mask(&v, &chest).unwrap();

        let g = v.grid();
        let body = Ellipsoid { center_mm: spec.body.center_mm, radii_mm: spec.body.radii_mm };
        let (nx, ny, nz) = g.dims;
        let mut bed_seen = 0usize;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let inside = body.contains(g.voxel_center_mm(x, y, z));
                    if inside {
                        assert_eq!(cleaned.get(x, y, z), v.get(x, y, z));
                    } else {
                        assert_eq!(cleaned.get(x, y, z), -1000);
                        if v.get(x, y, z) == 60 {
                            bed_seen += 1;
                        }
                    }
                }
            }
        }
        assert!(bed_seen > 0, "phantom should actually contain bed voxels");
    }

    #[test]
    fn full_and_empty_masks_are_identity_and_annihilation() {
        let g = grid(4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let values: Vec<i16> = (0..g.voxel_count()).map(|_| rng.gen_range(-1024..=3071)).collect();
        let v = CtVolume::new(g, values).unwrap();
        let full = VoxelMask::from_fn(g.dims, |_, _, _| true);
        let empty = VoxelMask::empty(g.dims);
        assert_eq!(apply_chest_mask(&v, &full).unwrap(), v);
        assert!(apply_chest_mask(&v, &empty).unwrap().values().iter().all(|&h| h == -1000));
    }

    #[test]
    fn chest_mask_is_stable_under_rederivation() {
        let spec = bed_phantom();
        let (v, _, _) = generate_phantom(&spec, 0).unwrap();
        let chest1 = chest_mask(&decompose(&v, AIR_MAX_HU, BONE_MIN_HU).unwrap());
        let cleaned = apply_chest_mask(&v, &chest1).unwrap();
        let chest2 = chest_mask(&decompose(&cleaned, AIR_MAX_HU, BONE_MIN_HU).unwrap());
        assert!(chest1.is_subset_of(&chest2) && chest2.is_subset_of(&chest1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        // Hole filling may only add voxels, never remove them.
        #[test]
        fn fill_holes_is_a_superset(seed in any::<u64>(), density in 0.05f64..0.95) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let dims = (6, 6, 6);
            let m = VoxelMask::from_fn(dims, |_, _, _| rng.gen_bool(density));
            let filled = fill_holes(&m);
            prop_assert!(m.is_subset_of(&filled));
        }
    }

    #[test]
    fn fill_holes_closes_a_hollow_cube() {
        // 5^3 shell with a hollow 3^3 interior: the cavity must be filled,
        // while a fully open mask is left alone.
        let dims = (7, 7, 7);
        let shell = VoxelMask::from_fn(dims, |x, y, z| {
            let on_shell = (1..=5).contains(&x) && (1..=5).contains(&y) && (1..=5).contains(&z);
            let interior = (2..=4).contains(&x) && (2..=4).contains(&y) && (2..=4).contains(&z);
            on_shell && !interior
        });
        let filled = fill_holes(&shell);
        assert_eq!(filled.count(), 125);
        assert!(filled.get(3, 3, 3));

        let open = VoxelMask::from_fn(dims, |x, _, _| x == 3);
        assert_eq!(fill_holes(&open), open);
    }
}
