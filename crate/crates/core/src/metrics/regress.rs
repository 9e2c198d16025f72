//! Correlation and simple least squares: Pearson r, R², and the
//! slope/intercept of the best-fit line.

use crate::error::{Error, Result};

fn check_series(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            expected: x.len(),
            actual: y.len(),
            what: "paired series".into(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "need at least 2 points, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("series values must be finite".into()));
    }
    Ok(())
}

/// Centered sums: (Σdx², Σdy², Σdx·dy), with means subtracted first for
/// numerical stability.
fn centered_moments(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    (sxx, syy, sxy)
}

/// Pearson correlation coefficient; errors if either series is constant.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_series(x, y)?;
    let (sxx, syy, sxy) = centered_moments(x, y);
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidData(
            "correlation of a constant series is undefined".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Squared Pearson correlation (the explained-variance fraction of the
/// simple linear regression).
pub fn r_squared(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson_r(x, y).map(|r| r * r)
}

/// Least-squares line `y ≈ slope·x + intercept`; errors if `x` is constant.
pub fn linfit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_series(x, y)?;
    let (sxx, _, sxy) = centered_moments(x, y);
    if sxx == 0.0 {
        return Err(Error::InvalidData("cannot fit a line to constant x".into()));
    }
    let n = x.len() as f64;
    let slope = sxy / sxx;
    let intercept = y.iter().sum::<f64>() / n - slope * x.iter().sum::<f64>() / n;
    Ok((slope, intercept))
}
