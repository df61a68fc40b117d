//! Power-law exponent fits.

use crate::error::{Error, Result};

/// Least-squares slope of `ln value` against `ln N`.
pub fn fit_growth_exponent(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(alloc::format!(
            "exponent fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(n, v) in points {
        if n.is_nan() || n <= 0.0 {
            return Err(Error::NonPositive(n));
        }
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositive(v));
        }
    }
    let k = points.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for &(n, v) in points {
        sx += libm::log(n);
        sy += libm::log(v);
    }
    let (mx, my) = (sx / k, sy / k);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(n, v) in points {
        let dx = libm::log(n) - mx;
        sxy += dx * (libm::log(v) - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("exponent fit needs at least two distinct N".into()));
    }
    Ok(sxy / sxx)
}
