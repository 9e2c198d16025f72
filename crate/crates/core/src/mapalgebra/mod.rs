//! 2-D map manipulation: heat-map fusion and refinement, stack reduction,
//! thresholding, morphology, bounding-box extraction, CLAHE, and pixel-level
//! augmentations.
//!
//! Heat maps are real-valued images; binary masks are 0/1; `Gray8` is the
//! 8-bit display format. All operations are pure functions.

mod clahe;

pub use clahe::clahe;

use std::collections::VecDeque;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sidecar::{sidecar_path, Sidecar};

/// Default blur width for 56×56 activation maps.
pub const MAP_SIGMA: f64 = 2.0;
/// Default blur width at full radiograph scale.
pub const FULL_SIGMA: f64 = 8.0;
/// Default cutoff for turning fused activation maps into proposals.
pub const PROPOSAL_THRESHOLD: f64 = 0.4;
/// Default cutoff for turning localization maps into segmentations.
pub const LOCALIZATION_THRESHOLD: f64 = 0.8;

/// Real-valued 2-D map.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Real> HeatMap<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam("heat map dims must be >= 1".into()));
        }
        if values.len() != width * height {
            return Err(Error::SizeMismatch {
                expected: width * height,
                actual: values.len(),
                what: "heat map pixel count".into(),
            });
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, v: T) -> Self {
        Self { width, height, values: vec![v; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.values[y * self.width + x] = v;
    }

    fn same_dims(&self, other: &Self, what: &str) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::dims_2d((self.width, self.height), (other.width, other.height), what));
        }
        Ok(())
    }
}

/// 0/1 occupancy image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask2D {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryMask2D {
    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![0; width * height] }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![1; width * height] }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::SizeMismatch {
                expected: width * height,
                actual: bits.len(),
                what: "mask pixel count".into(),
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidData("mask bits must be 0/1".into()));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y) as u8);
            }
        }
        Self { width, height, bits }
    }

    /// Union of filled boxes; boxes must lie inside the image.
    pub fn from_boxes(width: usize, height: usize, boxes: &[BBox]) -> Result<Self> {
        let mut m = Self::empty(width, height);
        for b in boxes {
            b.check_inside(width, height)?;
            for y in b.y..b.y + b.h {
                for x in b.x..b.x + b.w {
                    m.bits[y * width + x] = 1;
                }
            }
        }
        Ok(m)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v as u8;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a <= b)
    }

    pub fn intersection_count(&self, other: &Self) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a & b != 0).count()
    }

    pub fn to_heatmap<T: Real>(&self) -> HeatMap<T> {
        HeatMap {
            width: self.width,
            height: self.height,
            values: self.bits.iter().map(|&b| T::of(b as f64)).collect(),
        }
    }
}

/// Axis-aligned box in pixel coordinates; (x, y) is the top-left pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BBox {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidParam(format!("box extent must be positive, got {w}x{h}")));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    fn check_inside(&self, width: usize, height: usize) -> Result<()> {
        if self.w == 0 || self.h == 0 || self.x + self.w > width || self.y + self.h > height {
            return Err(Error::InvalidParam(format!(
                "box {self:?} outside {width}x{height} image"
            )));
        }
        Ok(())
    }
}

/// 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gray8 {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Gray8 {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::SizeMismatch {
                expected: width * height,
                actual: data.len(),
                what: "image pixel count".into(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, v: u8) -> Self {
        Self { width, height, data: vec![v; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&b| b as u64).sum::<u64>() as f64 / self.data.len() as f64
    }

    pub fn apply_lut(&mut self, lut: &[u8]) {
        debug_assert_eq!(lut.len(), 256);
        for b in &mut self.data {
            *b = lut[*b as usize];
        }
    }

    /// Binary PGM (P5).
    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load_pgm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        parse_pgm(&bytes).map_err(|msg| Error::parse(Some(path.to_path_buf()), msg))
    }
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<Gray8, String> {
    // Header: "P5", width, height, maxval as whitespace-separated ASCII
    // tokens ('#' comments allowed), then a single whitespace and the payload.
    let mut pos = 0usize;
    let mut token = || -> std::result::Result<String, String> {
        while pos < bytes.len() {
            let b = bytes[pos];
            if b == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PGM header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err("not a binary PGM (P5) file".into());
    }
    let width: usize = token()?.parse().map_err(|_| "bad PGM width")?;
    let height: usize = token()?.parse().map_err(|_| "bad PGM height")?;
    let maxval: usize = token()?.parse().map_err(|_| "bad PGM maxval")?;
    if maxval != 255 {
        return Err(format!("unsupported PGM maxval {maxval}"));
    }
    pos += 1; // single whitespace after maxval
    let data = bytes.get(pos..pos + width * height).ok_or("truncated PGM payload")?;
    Gray8::new(width, height, data.to_vec()).map_err(|e| e.to_string())
}

impl BinaryMask2D {
    /// Writes the mask as a 0/255 PGM.
    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let img = Gray8 {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| b * 255).collect(),
        };
        img.save_pgm(path)
    }

    /// Reads a PGM as a mask; any nonzero pixel counts as set.
    pub fn load_pgm(path: &Path) -> Result<Self> {
        let img = Gray8::load_pgm(path)?;
        Ok(Self {
            width: img.width,
            height: img.height,
            bits: img.data.iter().map(|&b| (b != 0) as u8).collect(),
        })
    }
}

// ---------------------------------------------------------------------------
// Kernels and convolution

/// Boundary handling for separable convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Divide by the in-image kernel mass: constants are preserved exactly.
    Renormalize,
    /// Out-of-image taps read zero: total mass can only shrink.
    ZeroPad,
}

/// Normalized 1-D Gaussian truncated at 3σ (always at least 3 taps).
pub fn gaussian_kernel_1d(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let r = (3.0 * sigma).ceil() as usize;
    let r = r.max(1);
    let mut k: Vec<f64> = (0..=2 * r)
        .map(|i| {
            let d = i as f64 - r as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable 2-D convolution with the same 1-D kernel along x then y.
pub fn convolve_separable<T: Real>(
    values: &[T],
    width: usize,
    height: usize,
    kernel: &[f64],
    boundary: Boundary,
) -> Vec<T> {
    let r = kernel.len() / 2;
    let pass = |src: &[f64], dst: &mut [f64], len: usize, stride: usize, lines: usize, line_stride: usize| {
        for line in 0..lines {
            let base = line * line_stride;
            for i in 0..len {
                let mut acc = 0.0;
                let mut mass = 0.0;
                for (k, &kv) in kernel.iter().enumerate() {
                    let j = i as isize + k as isize - r as isize;
                    if j >= 0 && (j as usize) < len {
                        acc += kv * src[base + j as usize * stride];
                        mass += kv;
                    }
                }
                dst[base + i * stride] = match boundary {
                    Boundary::Renormalize => acc / mass,
                    Boundary::ZeroPad => acc,
                };
            }
        }
    };
    let src: Vec<f64> = values.iter().map(|v| v.to_f64().unwrap()).collect();
    let mut mid = vec![0.0f64; src.len()];
    // Horizontal: lines are rows.
    pass(&src, &mut mid, width, 1, height, width);
    let mut out = vec![0.0f64; src.len()];
    // Vertical: lines are columns.
    pass(&mid, &mut out, height, width, width, 1);
    out.into_iter().map(T::of).collect()
}

// ---------------------------------------------------------------------------
// Heat-map operations

/// Pixelwise maximum across a nonempty stack of equally sized maps.
pub fn stack_max<T: Real>(maps: &[HeatMap<T>]) -> Result<HeatMap<T>> {
    let first = maps.first().ok_or_else(|| Error::InvalidParam("stack_max needs at least one map".into()))?;
    let mut out = first.clone();
    for m in &maps[1..] {
        first.same_dims(m, "stack_max inputs")?;
        for (o, v) in out.values.iter_mut().zip(&m.values) {
            if *v > *o {
                *o = *v;
            }
        }
    }
    Ok(out)
}

/// Rescales to [0,1]; a constant map becomes the zero map.
pub fn normalize01<T: Real>(m: &HeatMap<T>) -> HeatMap<T> {
    let mut min = m.values[0];
    let mut max = m.values[0];
    for &v in &m.values {
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }
    if max <= min {
        return HeatMap::filled(m.width, m.height, T::zero());
    }
    let span = max - min;
    HeatMap {
        width: m.width,
        height: m.height,
        values: m.values.iter().map(|&v| (v - min) / span).collect(),
    }
}

/// Gaussian smoothing with a renormalized boundary: constants stay constant.
pub fn gaussian_blur<T: Real>(m: &HeatMap<T>, sigma: f64) -> Result<HeatMap<T>> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParam(format!("blur sigma must be positive, got {sigma}")));
    }
    let kernel = gaussian_kernel_1d(sigma);
    let values = convolve_separable(&m.values, m.width, m.height, &kernel, Boundary::Renormalize);
    Ok(HeatMap { width: m.width, height: m.height, values })
}

/// Fuses two aligned maps: pixelwise max, smoothed, then rescaled to [0,1].
pub fn fuse_pair<T: Real>(a: &HeatMap<T>, b: &HeatMap<T>, sigma: f64) -> Result<HeatMap<T>> {
    a.same_dims(b, "fuse_pair inputs")?;
    let merged = stack_max(&[a.clone(), b.clone()])?;
    Ok(normalize01(&gaussian_blur(&merged, sigma)?))
}

/// Bilinear resize with pixel-center alignment; constants are preserved.
pub fn resize_map<T: Real>(m: &HeatMap<T>, new_w: usize, new_h: usize) -> Result<HeatMap<T>> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::InvalidParam("resize target dims must be >= 1".into()));
    }
    let sx = m.width as f64 / new_w as f64;
    let sy = m.height as f64 / new_h as f64;
    let mut values = Vec::with_capacity(new_w * new_h);
    for y in 0..new_h {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (m.height - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(m.height - 1);
        let wy = fy - y0 as f64;
        for x in 0..new_w {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (m.width - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(m.width - 1);
            let wx = fx - x0 as f64;
            let v00 = m.get(x0, y0).to_f64().unwrap();
            let v10 = m.get(x1, y0).to_f64().unwrap();
            let v01 = m.get(x0, y1).to_f64().unwrap();
            let v11 = m.get(x1, y1).to_f64().unwrap();
            let top = v00 * (1.0 - wx) + v10 * wx;
            let bot = v01 * (1.0 - wx) + v11 * wx;
            values.push(T::of(top * (1.0 - wy) + bot * wy));
        }
    }
    HeatMap::new(new_w, new_h, values)
}

/// Morphological dilation with a square kernel of side `2·half + 1`.
pub fn dilate(m: &BinaryMask2D, half: usize) -> BinaryMask2D {
    let (w, h) = (m.width, m.height);
    let r = half as isize;
    BinaryMask2D::from_fn(w, h, |x, y| {
        for dy in -r..=r {
            for dx in -r..=r {
                let (qx, qy) = (x as isize + dx, y as isize + dy);
                if qx >= 0 && qy >= 0 && (qx as usize) < w && (qy as usize) < h && m.get(qx as usize, qy as usize)
                {
                    return true;
                }
            }
        }
        false
    })
}

/// Pixels at or above `t`; `t` must lie in [0,1] for normalized maps.
pub fn threshold_mask<T: Real>(m: &HeatMap<T>, t: f64) -> Result<BinaryMask2D> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParam(format!("threshold must be in [0,1], got {t}")));
    }
    let tt = T::of(t);
    Ok(BinaryMask2D {
        width: m.width,
        height: m.height,
        bits: m.values.iter().map(|&v| (v >= tt) as u8).collect(),
    })
}

/// Pixelwise AND.
pub fn mask_intersect(a: &BinaryMask2D, b: &BinaryMask2D) -> Result<BinaryMask2D> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::dims_2d((a.width, a.height), (b.width, b.height), "mask_intersect inputs"));
    }
    Ok(BinaryMask2D {
        width: a.width,
        height: a.height,
        bits: a.bits.iter().zip(&b.bits).map(|(&x, &y)| x & y).collect(),
    })
}

/// Ground-truth target map: union of boxes, dilated 5×5, Gaussian-smoothed.
/// Values stay in [0,1] (blur is a convex combination of 0/1 pixels).
pub fn boxes_to_target<T: Real>(
    boxes: &[BBox],
    width: usize,
    height: usize,
    sigma: f64,
) -> Result<HeatMap<T>> {
    let raster = BinaryMask2D::from_boxes(width, height, boxes)?;
    gaussian_blur(&dilate(&raster, 2).to_heatmap(), sigma)
}

/// Stage-2 proposal: keep fused activation at or above `proposal_t`, mask it
/// to the GT boxes, then smooth.
pub fn refine_proposal<T: Real>(
    fused: &HeatMap<T>,
    gt_boxes: &[BBox],
    proposal_t: f64,
    sigma: f64,
) -> Result<HeatMap<T>> {
    let hot = threshold_mask(fused, proposal_t)?;
    let gt = BinaryMask2D::from_boxes(fused.width, fused.height, gt_boxes)?;
    let kept = mask_intersect(&hot, &gt)?;
    gaussian_blur(&kept.to_heatmap(), sigma)
}

// ---------------------------------------------------------------------------
// Connected components

/// Labels 8-connected components; returns (labels, component count) where
/// labels are 1-based and 0 means background.
pub fn label_components8(m: &BinaryMask2D) -> (Vec<u32>, u32) {
    let (w, h) = (m.width, m.height);
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start_y in 0..h {
        for start_x in 0..w {
            if !m.get(start_x, start_y) || labels[start_y * w + start_x] != 0 {
                continue;
            }
            next += 1;
            labels[start_y * w + start_x] = next;
            queue.push_back((start_x, start_y));
            while let Some((x, y)) = queue.pop_front() {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (qx, qy) = (x as i64 + dx, y as i64 + dy);
                        if qx < 0 || qy < 0 || qx >= w as i64 || qy >= h as i64 {
                            continue;
                        }
                        let (qx, qy) = (qx as usize, qy as usize);
                        if m.get(qx, qy) && labels[qy * w + qx] == 0 {
                            labels[qy * w + qx] = next;
                            queue.push_back((qx, qy));
                        }
                    }
                }
            }
        }
    }
    (labels, next)
}

/// Tight bounding box per 8-connected component, largest area first (ties by
/// top-left position, scanning order).
pub fn components_to_bboxes(m: &BinaryMask2D) -> Vec<BBox> {
    let (labels, n) = label_components8(m);
    if n == 0 {
        return Vec::new();
    }
    #[derive(Clone)]
    struct Extent {
        min_x: usize,
        min_y: usize,
        max_x: usize,
        max_y: usize,
        seen: bool,
    }
    let mut extents =
        vec![Extent { min_x: usize::MAX, min_y: usize::MAX, max_x: 0, max_y: 0, seen: false }; n as usize];
    for y in 0..m.height {
        for x in 0..m.width {
            let lab = labels[y * m.width + x];
            if lab == 0 {
                continue;
            }
            let e = &mut extents[(lab - 1) as usize];
            e.min_x = e.min_x.min(x);
            e.min_y = e.min_y.min(y);
            e.max_x = e.max_x.max(x);
            e.max_y = e.max_y.max(y);
            e.seen = true;
        }
    }
    let mut boxes: Vec<BBox> = extents
        .into_iter()
        .filter(|e| e.seen)
        .map(|e| BBox { x: e.min_x, y: e.min_y, w: e.max_x - e.min_x + 1, h: e.max_y - e.min_y + 1 })
        .collect();
    boxes.sort_by(|a, b| b.area().cmp(&a.area()).then(a.y.cmp(&b.y)).then(a.x.cmp(&b.x)));
    boxes
}

// ---------------------------------------------------------------------------
// 8-bit augmentations

/// Power-law intensity remap `v ← round(255·(v/255)^gamma)`.
pub fn gamma_adjust(img: &Gray8, gamma: f64) -> Result<Gray8> {
    if gamma <= 0.0 {
        return Err(Error::InvalidParam(format!("gamma must be positive, got {gamma}")));
    }
    let lut: Vec<u8> =
        (0..=255u16).map(|v| (255.0 * (v as f64 / 255.0).powf(gamma)).round() as u8).collect();
    let mut out = img.clone();
    out.apply_lut(&lut);
    Ok(out)
}

/// Blends a cosine-falloff disc toward `intensity`. With `jitter` > 0 the
/// disc edge is roughened inward by a seeded per-pixel radius shrink, so
/// pixels beyond `radius` are never touched.
pub fn implant_blob(
    img: &Gray8,
    center: (usize, usize),
    radius: f64,
    intensity: u8,
    seed: u64,
    jitter: f64,
) -> Result<Gray8> {
    if center.0 >= img.width || center.1 >= img.height {
        return Err(Error::InvalidParam(format!(
            "blob center {center:?} outside {}x{} image",
            img.width, img.height
        )));
    }
    if radius <= 0.0 {
        return Err(Error::InvalidParam("blob radius must be positive".into()));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::InvalidParam("blob jitter must be in [0,1)".into()));
    }
    let mut out = img.clone();
    let r_ceil = radius.ceil() as isize;
    let (cx, cy) = (center.0 as isize, center.1 as isize);
    for dy in -r_ceil..=r_ceil {
        for dx in -r_ceil..=r_ceil {
            let (x, y) = (cx + dx, cy + dy);
            if x < 0 || y < 0 || x >= img.width as isize || y >= img.height as isize {
                continue;
            }
            let d = ((dx * dx + dy * dy) as f64).sqrt();
            // Per-pixel shrunk radius: r·(1 − jitter·u), u ∈ [0,1).
            let r_here = if jitter > 0.0 && d > 0.0 {
                let u = hash_unit(seed, (y as u64) << 32 | x as u64);
                radius * (1.0 - jitter * u)
            } else {
                radius
            };
            if d > r_here {
                continue;
            }
            let w = 0.5 * (1.0 + (std::f64::consts::PI * d / r_here).cos());
            let v = img.get(x as usize, y as usize) as f64;
            out.set(x as usize, y as usize, ((1.0 - w) * v + w * intensity as f64).round() as u8);
        }
    }
    Ok(out)
}

/// SplitMix64-style hash of (seed, key) onto [0,1).
fn hash_unit(seed: u64, key: u64) -> f64 {
    let mut z = seed.wrapping_add(key.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) as f64 / u64::MAX as f64
}

// ---------------------------------------------------------------------------
// Heat-map stack I/O

/// Writes a stack of equally sized maps as raw little-endian f32 plus a
/// sidecar (count, width, height, dtype).
pub fn save_stack<T: Real>(maps: &[HeatMap<T>], raw_path: &Path) -> Result<()> {
    let first = maps.first().ok_or_else(|| Error::InvalidParam("cannot save an empty stack".into()))?;
    let mut bytes = Vec::with_capacity(maps.len() * first.values.len() * 4);
    for m in maps {
        first.same_dims(m, "stack members")?;
        for v in &m.values {
            bytes.extend_from_slice(&(v.to_f64().unwrap() as f32).to_le_bytes());
        }
    }
    std::fs::write(raw_path, bytes).map_err(|e| Error::io(raw_path, e))?;
    let mut sc = Sidecar::new();
    sc.set("count", maps.len());
    sc.set("width", first.width);
    sc.set("height", first.height);
    sc.set("dtype", "float32le");
    sc.save(&sidecar_path(raw_path))
}

pub fn load_stack<T: Real>(raw_path: &Path) -> Result<Vec<HeatMap<T>>> {
    let sc = Sidecar::load(&sidecar_path(raw_path))?;
    let count = sc.require_usize("count")?;
    let width = sc.require_usize("width")?;
    let height = sc.require_usize("height")?;
    let dtype = sc.require("dtype")?;
    if dtype != "float32le" {
        return Err(Error::parse(
            Some(raw_path.to_path_buf()),
            format!("expected dtype float32le, got {dtype}"),
        ));
    }
    let bytes = std::fs::read(raw_path).map_err(|e| Error::io(raw_path, e))?;
    let per = width * height;
    if bytes.len() != count * per * 4 {
        return Err(Error::SizeMismatch {
            expected: count * per * 4,
            actual: bytes.len(),
            what: format!("stack payload bytes for {}", raw_path.display()),
        });
    }
    let mut maps = Vec::with_capacity(count);
    for i in 0..count {
        let values = bytes[i * per * 4..(i + 1) * per * 4]
            .chunks_exact(4)
            .map(|c| T::of(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect();
        maps.push(HeatMap::new(width, height, values)?);
    }
    Ok(maps)
}
