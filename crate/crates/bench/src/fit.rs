//! Ordinary least squares in log-log space.

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln κ, mean ln iterations)` pairs the fit was computed from.
    pub points: Vec<(f64, f64)>,
}

/// Fits `y = slope·x + intercept` to points that are already in natural-log
/// coordinates, e.g. `(ln κ, mean ln iterations)`.
///
/// `r²` is 1 when every `y` is equal and the fit is exact.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(BenchError::DegenerateFit { distinct: xs.len() });
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(BenchError::InvalidSpec("non-finite point in log-log fit".into()));
    }

    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}
