use serde::Serialize;

use crate::engine::Trace;
use crate::error::{DishError, Result};

pub const MIN_FIT_POINTS: usize = 10;

/// Least-squares line through `(k, ln rel_err)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `ln e_k ≈ intercept + slope·k` over points with `e_k ∈ (1e-12, 1)`,
/// skipping the first 10% of iterations.
pub fn fit_series(series: &[(usize, f64)]) -> Result<RateFit> {
    let last_k = series.iter().map(|p| p.0).max().unwrap_or(0);
    let skip_below = (last_k as f64 * 0.1).ceil() as usize;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(k, e)| *k >= skip_below && *e > 1e-12 && *e < 1.0)
        .map(|&(k, e)| (k as f64, e.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(DishError::InsufficientPoints { found: pts.len(), required: MIN_FIT_POINTS });
    }
    let m = pts.len() as f64;
    let mean_k = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_k).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_k) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_k;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit { slope, intercept, r_squared, points: pts.len() })
}

pub fn fit_rate(trace: &Trace) -> Result<RateFit> {
    let series: Vec<_> = trace.rows.iter().map(|r| (r.k, r.rel_err)).collect();
    fit_series(&series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series() {
        let s: Vec<_> = (0..100).map(|k| (k, 0.9f64.powi(k as i32))).collect();
        let fit = fit_series(&s).unwrap();
        assert!((fit.slope - 0.9f64.ln()).abs() < 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn constant_series() {
        let s: Vec<_> = (0..30).map(|k| (k, 0.25)).collect();
        let fit = fit_series(&s).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn too_few_points() {
        let s: Vec<_> = (0..5).map(|k| (k, 0.5)).collect();
        assert!(matches!(fit_series(&s), Err(DishError::InsufficientPoints { found: 4, required: 10 })));
    }
}
