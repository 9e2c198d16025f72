//! Synthetic longitudinal chest phantoms with voxel-level ground truth.
//!
//! A phantom is a body ellipsoid containing two lung ellipsoids, optional
//! bones and a bed slab, and spherical lesions that grow by a per-step factor
//! across time points. Generation rasterizes each shape by voxel-center
//! membership and returns the HU volume together with ground-truth lung and
//! lesion masks.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{CtVolume, Grid3, VoxelMask};

pub const BACKGROUND_HU: i16 = -1000;

fn d_body_hu() -> i16 {
    40
}
fn d_lung_hu() -> i16 {
    -800
}
fn d_bone_hu() -> i16 {
    700
}
fn d_lesion_hu() -> i16 {
    -100
}
fn d_bed_hu() -> i16 {
    60
}
fn d_growth() -> f64 {
    1.0
}
fn d_time_points() -> usize {
    1
}
fn d_spacing() -> [f64; 3] {
    [1.0; 3]
}

/// Axis-aligned ellipsoid: center and semi-axes in mm.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ellipsoid {
    pub center_mm: [f64; 3],
    pub radii_mm: [f64; 3],
}

impl Ellipsoid {
    fn normalized_sq(&self, p: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            let d = (p[a] - self.center_mm[a]) / self.radii_mm[a];
            s += d * d;
        }
        s
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.normalized_sq(p) <= 1.0
    }

    /// Point on the surface at spherical angles (theta from +z, phi around z).
    fn surface_point(&self, theta: f64, phi: f64) -> [f64; 3] {
        [
            self.center_mm[0] + self.radii_mm[0] * theta.sin() * phi.cos(),
            self.center_mm[1] + self.radii_mm[1] * theta.sin() * phi.sin(),
            self.center_mm[2] + self.radii_mm[2] * theta.cos(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Bone primitive: an ellipsoid, or a circular cylinder along a grid axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BoneKind {
    Ellipsoid { center_mm: [f64; 3], radii_mm: [f64; 3] },
    Cylinder { center_mm: [f64; 3], radius_mm: f64, half_len_mm: f64, axis: Axis },
}

// No deny_unknown_fields here: serde cannot combine it with flatten, which
// routes the shape-specific fields into the tagged BoneKind enum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bone {
    #[serde(flatten)]
    pub shape: BoneKind,
    #[serde(default = "d_bone_hu")]
    pub hu: i16,
}

impl BoneKind {
    fn contains(&self, p: [f64; 3]) -> bool {
        match *self {
            BoneKind::Ellipsoid { center_mm, radii_mm } => {
                Ellipsoid { center_mm, radii_mm }.contains(p)
            }
            BoneKind::Cylinder { center_mm, radius_mm, half_len_mm, axis } => {
                let ax = axis.index();
                if (p[ax] - center_mm[ax]).abs() > half_len_mm {
                    return false;
                }
                let mut r2 = 0.0;
                for a in 0..3 {
                    if a != ax {
                        let d = p[a] - center_mm[a];
                        r2 += d * d;
                    }
                }
                r2 <= radius_mm * radius_mm
            }
        }
    }
}

/// Spherical lesion seeded at a fixed center; radius at time t is
/// `radius_mm · growth^t`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lesion {
    pub center_mm: [f64; 3],
    pub radius_mm: f64,
    #[serde(default = "d_lesion_hu")]
    pub hu: i16,
    #[serde(default = "d_growth")]
    pub growth: f64,
}

impl Lesion {
    pub fn radius_at(&self, t: usize) -> f64 {
        self.radius_mm * self.growth.powi(t as i32)
    }

    fn contains(&self, p: [f64; 3], t: usize) -> bool {
        let r = self.radius_at(t);
        let dx = p[0] - self.center_mm[0];
        let dy = p[1] - self.center_mm[1];
        let dz = p[2] - self.center_mm[2];
        dx * dx + dy * dy + dz * dz <= r * r
    }
}

/// Patient-bed stand-in: an axis-aligned slab disjoint from the body.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bed {
    pub min_mm: [f64; 3],
    pub max_mm: [f64; 3],
    #[serde(default = "d_bed_hu")]
    pub hu: i16,
}

impl Bed {
    fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min_mm[a] && p[a] <= self.max_mm[a])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub center_mm: [f64; 3],
    pub radii_mm: [f64; 3],
    #[serde(default = "d_body_hu")]
    pub hu: i16,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LungsSpec {
    pub left: Ellipsoid,
    pub right: Ellipsoid,
    #[serde(default = "d_lung_hu")]
    pub hu: i16,
}

/// Declarative phantom description, loadable from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    /// Voxel pitch; defaults to 1 mm isotropic.
    #[serde(default = "d_spacing")]
    pub spacing_mm: [f64; 3],
    /// World position of voxel (0,0,0)'s center; defaults to centering the
    /// volume on the world origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_mm: Option<[f64; 3]>,
    #[serde(default = "d_time_points")]
    pub time_points: usize,
    pub body: BodySpec,
    pub lungs: LungsSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bones: Vec<Bone>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lesions: Vec<Lesion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bed: Option<Bed>,
}

impl PhantomSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: PhantomSpec =
            toml::from_str(text).map_err(|e| Error::parse(None, format!("phantom spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: PhantomSpec = toml::from_str(&text)
            .map_err(|e| Error::parse(Some(path.to_path_buf()), format!("phantom spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("phantom spec serializes")
    }

    pub fn grid(&self) -> Result<Grid3> {
        let dims = (self.dims[0], self.dims[1], self.dims[2]);
        let spacing = (self.spacing_mm[0], self.spacing_mm[1], self.spacing_mm[2]);
        let origin = match self.origin_mm {
            Some(o) => (o[0], o[1], o[2]),
            // Center the voxel lattice on the world origin.
            None => (
                -0.5 * (self.dims[0] as f64 - 1.0) * self.spacing_mm[0],
                -0.5 * (self.dims[1] as f64 - 1.0) * self.spacing_mm[1],
                -0.5 * (self.dims[2] as f64 - 1.0) * self.spacing_mm[2],
            ),
        };
        Grid3::new(dims, spacing, origin)
    }

    fn body_ellipsoid(&self) -> Ellipsoid {
        Ellipsoid { center_mm: self.body.center_mm, radii_mm: self.body.radii_mm }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.time_points < 1 {
            return Err(Error::InvalidParam("time_points must be >= 1".into()));
        }
        for (name, radii) in [("body", &self.body.radii_mm)]
            .into_iter()
            .chain([("left lung", &self.lungs.left.radii_mm), ("right lung", &self.lungs.right.radii_mm)])
        {
            if radii.iter().any(|&r| r <= 0.0) {
                return Err(Error::InvalidParam(format!("{name} semi-axes must be positive")));
            }
        }
        let body = self.body_ellipsoid();
        for (name, lung) in [("left", &self.lungs.left), ("right", &self.lungs.right)] {
            if !ellipsoid_inside(lung, &body) {
                return Err(Error::InvalidParam(format!("{name} lung extends outside the body")));
            }
        }
        for (i, l) in self.lesions.iter().enumerate() {
            if l.radius_mm <= 0.0 {
                return Err(Error::InvalidParam(format!("lesion {i}: radius must be positive")));
            }
            if l.growth <= 0.0 {
                return Err(Error::InvalidParam(format!("lesion {i}: growth factor must be positive")));
            }
            if !self.lungs.left.contains(l.center_mm) && !self.lungs.right.contains(l.center_mm) {
                return Err(Error::InvalidParam(format!("lesion {i}: center lies outside both lungs")));
            }
        }
        if let Some(bed) = &self.bed {
            if (0..3).any(|a| bed.min_mm[a] >= bed.max_mm[a]) {
                return Err(Error::InvalidParam("bed slab has empty extent".into()));
            }
            if slab_touches_ellipsoid(bed, &body) {
                return Err(Error::InvalidParam("bed slab intersects the body".into()));
            }
        }
        Ok(())
    }
}

/// Surface-sampled containment check for one axis-aligned ellipsoid in another.
fn ellipsoid_inside(inner: &Ellipsoid, outer: &Ellipsoid) -> bool {
    const N_THETA: usize = 24;
    const N_PHI: usize = 48;
    for it in 0..=N_THETA {
        let theta = std::f64::consts::PI * it as f64 / N_THETA as f64;
        for ip in 0..N_PHI {
            let phi = std::f64::consts::TAU * ip as f64 / N_PHI as f64;
            if !outer.contains(inner.surface_point(theta, phi)) {
                return false;
            }
        }
    }
    true
}

/// Exact slab/ellipsoid intersection test: scale space so the ellipsoid is the
/// unit ball, clamp its center into the (still axis-aligned) slab, and compare
/// the distance to 1.
fn slab_touches_ellipsoid(bed: &Bed, e: &Ellipsoid) -> bool {
    let mut d2 = 0.0;
    for a in 0..3 {
        let lo = (bed.min_mm[a] - e.center_mm[a]) / e.radii_mm[a];
        let hi = (bed.max_mm[a] - e.center_mm[a]) / e.radii_mm[a];
        let c = 0.0f64.clamp(lo, hi);
        d2 += c * c;
    }
    d2 <= 1.0
}

/// Rasterizes the phantom at time point `t`.
///
/// Shape HUs overwrite one another in priority order lesion > lung > bone >
/// body > bed > background. The lungs mask covers both lung ellipsoids
/// (lesion voxels included); the lesion mask covers lesion voxels inside the
/// lungs only.
pub fn generate_phantom(spec: &PhantomSpec, t: usize) -> Result<(CtVolume, VoxelMask, VoxelMask)> {
    spec.validate()?;
    if t >= spec.time_points {
        return Err(Error::InvalidParam(format!(
            "time index {t} out of range (time_points = {})",
            spec.time_points
        )));
    }
    let grid = spec.grid()?;
    let body = spec.body_ellipsoid();
    let n = grid.voxel_count();
    let mut hu = vec![BACKGROUND_HU; n];
    let mut lungs = VoxelMask::empty(grid.dims);
    let mut lesion = VoxelMask::empty(grid.dims);

    let mut i = 0usize;
    for z in 0..grid.dims.2 {
        for y in 0..grid.dims.1 {
            for x in 0..grid.dims.0 {
                let p = grid.voxel_center_mm(x, y, z);
                let in_lung = spec.lungs.left.contains(p) || spec.lungs.right.contains(p);
                // Later declarations win within a category.
                let in_lesion = spec.lesions.iter().rev().find(|l| l.contains(p, t));
                let in_bone = spec.bones.iter().rev().find(|b| b.shape.contains(p));

                let v = if let Some(l) = in_lesion {
                    l.hu
                } else if in_lung {
                    spec.lungs.hu
                } else if let Some(b) = in_bone {
                    b.hu
                } else if body.contains(p) {
                    spec.body.hu
                } else if spec.bed.as_ref().is_some_and(|b| b.contains(p)) {
                    spec.bed.as_ref().unwrap().hu
                } else {
                    BACKGROUND_HU
                };
                hu[i] = v;
                if in_lung {
                    lungs.set(x, y, z, true);
                    if in_lesion.is_some() {
                        lesion.set(x, y, z, true);
                    }
                }
                i += 1;
            }
        }
    }
    Ok((CtVolume::new(grid, hu)?, lungs, lesion))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-lung phantom on a 64 mm cube; lesion in the left lung.
    fn base_spec(lesions: Vec<Lesion>) -> PhantomSpec {
        PhantomSpec {
            dims: [64, 64, 64],
            spacing_mm: [1.0, 1.0, 1.0],
            origin_mm: None,
            time_points: 4,
            body: BodySpec { center_mm: [0.0, 0.0, 0.0], radii_mm: [30.0, 28.0, 31.0], hu: 40 },
            lungs: LungsSpec {
                left: Ellipsoid { center_mm: [-13.0, 0.0, 0.0], radii_mm: [11.0, 16.0, 20.0] },
                right: Ellipsoid { center_mm: [13.0, 0.0, 0.0], radii_mm: [11.0, 16.0, 20.0] },
                hu: -800,
            },
            bones: vec![],
            lesions,
            bed: None,
        }
    }

    #[test]
    fn zero_lesions_give_an_empty_lesion_mask() {
        let spec = base_spec(vec![]);
        let (_, lungs, lesion) = generate_phantom(&spec, 0).unwrap();
        assert_eq!(lesion.count(), 0);
        assert!(lungs.count() > 0);
    }

    #[test]
    fn hu_priority_is_lesion_over_lung_over_body_over_background() {
        let spec = base_spec(vec![Lesion {
            center_mm: [-13.0, 0.0, 5.0],
            radius_mm: 4.0,
            hu: -100,
            growth: 1.0,
        }]);
        let (v, _, _) = generate_phantom(&spec, 0).unwrap();
        let g = v.grid();
        // Volume is centered on the origin: world (0,0,0) sits between voxels
        // 31 and 32; voxel centers land on half-integers. Probe near targets.
        let at = |wx: f64, wy: f64, wz: f64| {
            let x = ((wx - g.origin_mm.0) / g.spacing_mm.0).round() as usize;
            let y = ((wy - g.origin_mm.1) / g.spacing_mm.1).round() as usize;
            let z = ((wz - g.origin_mm.2) / g.spacing_mm.2).round() as usize;
            v.get(x, y, z)
        };
        assert_eq!(at(-13.0, 0.0, 5.0), -100); // lesion interior
        assert_eq!(at(-13.0, 0.0, -10.0), -800); // lung away from lesion
        assert_eq!(at(0.0, 0.0, 0.0), 40); // mediastinum: body between lungs
        assert_eq!(at(-31.0, -27.0, 0.0), -1000); // outside body
    }

    #[test]
    fn lesion_mask_is_contained_in_lungs_mask() {
        let spec = base_spec(vec![Lesion {
            center_mm: [-13.0, 0.0, 5.0],
            radius_mm: 6.0,
            hu: -100,
            growth: 1.2,
        }]);
        for t in 0..spec.time_points {
            let (_, lungs, lesion) = generate_phantom(&spec, t).unwrap();
            assert!(lesion.is_subset_of(&lungs), "t={t}");
        }
    }

    #[test]
    fn growth_factor_1p26_doubles_lesion_volume_per_step() {
        // 1.26^3 = 2.000376...: each step should double the voxel count.
        let spec = base_spec(vec![Lesion {
            center_mm: [-13.0, 0.0, 0.0],
            radius_mm: 6.0,
            hu: -100,
            growth: 1.26,
        }]);
        let count = |t: usize| generate_phantom(&spec, t).unwrap().2.count() as f64;
        let (c0, c1) = (count(0), count(1));
        let sphere = |r: f64| 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
        assert!((c0 - sphere(6.0)).abs() / sphere(6.0) < 0.10, "c0={c0}");
        assert!((c1 - sphere(6.0 * 1.26)).abs() / sphere(6.0 * 1.26) < 0.10, "c1={c1}");
        assert!((c1 / c0 - 2.0).abs() < 0.2, "ratio={}", c1 / c0);
    }

    #[test]
    fn lesion_voxel_count_is_nondecreasing_in_time() {
        let spec = base_spec(vec![Lesion {
            center_mm: [-13.0, 0.0, 0.0],
            radius_mm: 4.0,
            hu: -100,
            growth: 1.15,
        }]);
        let counts: Vec<usize> =
            (0..spec.time_points).map(|t| generate_phantom(&spec, t).unwrap().2.count()).collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        // Time index out of range.
        let spec = base_spec(vec![]);
        assert!(generate_phantom(&spec, 4).is_err());

        // Lesion centered outside both lungs.
        let bad = base_spec(vec![Lesion {
            center_mm: [0.0, 0.0, 0.0],
            radius_mm: 2.0,
            hu: -100,
            growth: 1.0,
        }]);
        assert!(bad.validate().is_err());

        // Lung poking out of the body.
        let mut bad = base_spec(vec![]);
        bad.lungs.left.radii_mm = [40.0, 16.0, 20.0];
        assert!(bad.validate().is_err());

        // Bed overlapping the body.
        let mut bad = base_spec(vec![]);
        bad.bed = Some(Bed { min_mm: [-5.0, -5.0, -5.0], max_mm: [5.0, 5.0, 5.0], hu: 60 });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = PhantomSpec {
            bones: vec![
                Bone {
                    shape: BoneKind::Cylinder {
                        center_mm: [0.0, -20.0, 0.0],
                        radius_mm: 4.0,
                        half_len_mm: 25.0,
                        axis: Axis::Z,
                    },
                    hu: 700,
                },
                Bone {
                    shape: BoneKind::Ellipsoid { center_mm: [0.0, 20.0, 0.0], radii_mm: [3.0, 3.0, 8.0] },
                    hu: 700,
                },
            ],
            bed: Some(Bed { min_mm: [-32.0, 29.0, -32.0], max_mm: [32.0, 31.0, 32.0], hu: 60 }),
            ..base_spec(vec![Lesion {
                center_mm: [-13.0, 0.0, 5.0],
                radius_mm: 4.0,
                hu: -100,
                growth: 1.26,
            }])
        };
        let text = spec.to_toml_string();
        let back = PhantomSpec::from_toml_str(&text).unwrap();
        let (v1, _, _) = generate_phantom(&spec, 1).unwrap();
        let (v2, _, _) = generate_phantom(&back, 1).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn spacing_defaults_to_one_mm_isotropic() {
        let toml = r#"
dims = [16, 16, 16]

[body]
center_mm = [0.0, 0.0, 0.0]
radii_mm = [7.0, 6.0, 7.0]

[lungs.left]
center_mm = [-3.0, 0.0, 0.0]
radii_mm = [2.0, 3.0, 4.0]

[lungs.right]
center_mm = [3.0, 0.0, 0.0]
radii_mm = [2.0, 3.0, 4.0]
"#;
        let spec = PhantomSpec::from_toml_str(toml).unwrap();
        assert_eq!(spec.spacing_mm, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn bed_and_bones_paint_their_hu() {
        let mut spec = base_spec(vec![]);
        spec.bones = vec![Bone {
            shape: BoneKind::Cylinder {
                center_mm: [0.0, -20.0, 0.0],
                radius_mm: 4.0,
                half_len_mm: 25.0,
                axis: Axis::Z,
            },
            hu: 700,
        }];
        spec.bed = Some(Bed { min_mm: [-32.0, 29.5, -32.0], max_mm: [32.0, 31.9, 32.0], hu: 60 });
        let (v, _, _) = generate_phantom(&spec, 0).unwrap();
        let g = v.grid();
        let vox = |wx: f64, wy: f64, wz: f64| {
            let x = ((wx - g.origin_mm.0) / g.spacing_mm.0).round() as usize;
            let y = ((wy - g.origin_mm.1) / g.spacing_mm.1).round() as usize;
            let z = ((wz - g.origin_mm.2) / g.spacing_mm.2).round() as usize;
            v.get(x, y, z)
        };
        assert_eq!(vox(0.0, -20.0, 0.0), 700);
        assert_eq!(vox(0.0, 30.5, 0.0), 60);
    }
}
