//! Exact parametric ray–voxel traversal.
//!
//! A ray is clipped to the grid's bounding box, then stepped voxel by voxel
//! along the axis whose next boundary comes first, yielding the exact segment
//! length inside every voxel crossed. Segment lengths telescope, so their sum
//! reproduces the clipped chord length to floating-point accuracy.

use crate::materials::MaterialMasks;
use crate::volume::Grid3;

/// Clips `origin + t·dir` (t ≥ 0, unit `dir`) to the box `[lo, hi]`.
/// Returns the parametric interval, or `None` when the ray misses or only
/// grazes the box. Rays starting inside clip to `t = 0`.
pub fn clip_to_bounds(lo: [f64; 3], hi: [f64; 3], origin: [f64; 3], dir: [f64; 3]) -> Option<(f64, f64)> {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        if dir[a] == 0.0 {
            if origin[a] < lo[a] || origin[a] > hi[a] {
                return None;
            }
        } else {
            let ta = (lo[a] - origin[a]) / dir[a];
            let tb = (hi[a] - origin[a]) / dir[a];
            let (near, far) = if ta < tb { (ta, tb) } else { (tb, ta) };
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 >= t1 {
                return None;
            }
        }
    }
    Some((t0, t1))
}

/// Walks the ray through the grid, calling `visit(x, y, z, segment_mm)` for
/// every voxel the chord crosses with its exact intersection length in mm.
/// `dir` need not be normalized; a zero direction or a miss visits nothing.
pub fn traverse(
    grid: &Grid3,
    origin_mm: [f64; 3],
    dir: [f64; 3],
    mut visit: impl FnMut(usize, usize, usize, f64),
) {
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if norm == 0.0 {
        return;
    }
    let d = [dir[0] / norm, dir[1] / norm, dir[2] / norm];
    let (lo, hi) = grid.bounds_mm();
    let Some((t0, t1)) = clip_to_bounds(lo, hi, origin_mm, d) else {
        return;
    };
    let dims = [grid.dims.0 as isize, grid.dims.1 as isize, grid.dims.2 as isize];
    let sp = [grid.spacing_mm.0, grid.spacing_mm.1, grid.spacing_mm.2];

    // Entry voxel and, per axis, the parameter of the next boundary crossing.
    let mut v = [0isize; 3];
    let mut step = [0isize; 3];
    let mut t_next = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        let p = origin_mm[a] + t0 * d[a];
        v[a] = (((p - lo[a]) / sp[a]).floor() as isize).clamp(0, dims[a] - 1);
        if d[a] > 0.0 {
            step[a] = 1;
            t_next[a] = (lo[a] + (v[a] + 1) as f64 * sp[a] - origin_mm[a]) / d[a];
            t_delta[a] = sp[a] / d[a];
        } else if d[a] < 0.0 {
            step[a] = -1;
            t_next[a] = (lo[a] + v[a] as f64 * sp[a] - origin_mm[a]) / d[a];
            t_delta[a] = -sp[a] / d[a];
        }
    }

    let mut t_cur = t0;
    loop {
        let axis = if t_next[0] <= t_next[1] {
            if t_next[0] <= t_next[2] {
                0
            } else {
                2
            }
        } else if t_next[1] <= t_next[2] {
            1
        } else {
            2
        };
        let t_cross = t_next[axis];
        let t_end = t_cross.min(t1);
        if t_end > t_cur {
            visit(v[0] as usize, v[1] as usize, v[2] as usize, t_end - t_cur);
            t_cur = t_end;
        }
        if t_cross >= t1 {
            break;
        }
        v[axis] += step[axis];
        if v[axis] < 0 || v[axis] >= dims[axis] {
            break;
        }
        t_next[axis] += t_delta[axis];
    }
}

/// Per-material path lengths in cm along one ray: `[air, soft, bone]`.
/// A ray missing the volume returns all zeros.
pub fn trace_ray(masks: &MaterialMasks, grid: &Grid3, origin_mm: [f64; 3], dir: [f64; 3]) -> [f64; 3] {
    let (nx, ny, _) = grid.dims;
    let air = masks.air.bits();
    let soft = masks.soft.bits();
    let mut mm = [0.0f64; 3];
    traverse(grid, origin_mm, dir, |x, y, z, len| {
        let i = x + nx * (y + ny * z);
        if air[i] != 0 {
            mm[0] += len;
        } else if soft[i] != 0 {
            mm[1] += len;
        } else {
            mm[2] += len;
        }
    });
    [mm[0] / 10.0, mm[1] / 10.0, mm[2] / 10.0]
}
