//! Contrast-limited adaptive histogram equalization.
//!
//! The image is covered by a grid of equally sized tiles (the image is
//! conceptually edge-padded so every tile has the same pixel count — this
//! keeps tile statistics comparable and makes a constant image map to a
//! constant image exactly). Each tile gets a clipped-histogram CDF lookup
//! table; pixels are remapped by bilinear interpolation between the four
//! nearest tile tables.

use crate::error::{Error, Result};
use crate::mapalgebra::Gray8;

/// Contrast-limited adaptive histogram equalization.
///
/// `clip_limit` is relative to the mean bin height (1 = strongest clipping,
/// large values disable clipping); `tiles` is the (columns, rows) grid and
/// must not exceed the image dimensions.
pub fn clahe(img: &Gray8, clip_limit: f64, tiles: (usize, usize)) -> Result<Gray8> {
    let (tx, ty) = tiles;
    if tx == 0 || ty == 0 {
        return Err(Error::InvalidParam("tile grid must be at least 1x1".into()));
    }
    if clip_limit < 1.0 {
        return Err(Error::InvalidParam(format!("clip limit must be >= 1, got {clip_limit}")));
    }
    let (w, h) = (img.width(), img.height());
    if w < tx || h < ty {
        return Err(Error::InvalidParam(format!(
            "image {w}x{h} is smaller than the {tx}x{ty} tile grid"
        )));
    }
    let tile_w = (w + tx - 1) / tx;
    let tile_h = (h + ty - 1) / ty;
    let area = tile_w * tile_h;
    let limit = ((clip_limit * area as f64 / 256.0).floor() as usize).max(1);

    // One LUT per tile: clipped histogram (excess mass redistributed evenly,
    // remainder to the lowest bins) followed by CDF scaling onto [0,255].
    let mut luts = vec![[0u8; 256]; tx * ty];
    for tj in 0..ty {
        for ti in 0..tx {
            let mut hist = [0usize; 256];
            for py in tj * tile_h..(tj + 1) * tile_h {
                let sy = py.min(h - 1);
                for px in ti * tile_w..(ti + 1) * tile_w {
                    let sx = px.min(w - 1);
                    hist[img.get(sx, sy) as usize] += 1;
                }
            }
            let mut excess = 0usize;
            for b in hist.iter_mut() {
                if *b > limit {
                    excess += *b - limit;
                    *b = limit;
                }
            }
            let bonus = excess / 256;
            let resid = excess % 256;
            for (i, b) in hist.iter_mut().enumerate() {
                *b += bonus + usize::from(i < resid);
            }
            let lut = &mut luts[tj * tx + ti];
            let mut cum = 0usize;
            for (i, &b) in hist.iter().enumerate() {
                cum += b;
                lut[i] = (255.0 * cum as f64 / area as f64).round() as u8;
            }
        }
    }

    // Per-axis interpolation setup: neighbor tile pair and blend weight for
    // every pixel coordinate. Tile centers are uniformly one tile apart.
    let axis = |n: usize, count: usize, tile: usize| -> Vec<(usize, usize, f64)> {
        let center = |i: usize| (i * tile) as f64 + (tile as f64 - 1.0) / 2.0;
        (0..n)
            .map(|p| {
                let pf = p as f64;
                if count == 1 || pf <= center(0) {
                    (0, 0, 0.0)
                } else if pf >= center(count - 1) {
                    (count - 1, count - 1, 0.0)
                } else {
                    let i0 = (((pf - center(0)) / tile as f64).floor() as usize).min(count - 2);
                    (i0, i0 + 1, (pf - center(i0)) / tile as f64)
                }
            })
            .collect()
    };
    let xs = axis(w, tx, tile_w);
    let ys = axis(h, ty, tile_h);

    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let (j0, j1, wy) = ys[y];
        for x in 0..w {
            let (i0, i1, wx) = xs[x];
            let v = img.get(x, y) as usize;
            let top = luts[j0 * tx + i0][v] as f64 * (1.0 - wx) + luts[j0 * tx + i1][v] as f64 * wx;
            let bot = luts[j1 * tx + i0][v] as f64 * (1.0 - wx) + luts[j1 * tx + i1][v] as f64 * wx;
            data.push((top * (1.0 - wy) + bot * wy).round() as u8);
        }
    }
    Gray8::new(w, h, data)
}
