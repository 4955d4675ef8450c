//! Least-squares power laws `C̄ ≈ γ N^s` in log-log coordinates.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 positive points in [{lo}, {hi}], found {found}")]
    InsufficientPoints { lo: f64, hi: f64, found: usize },
    #[error("fit range [{0}, {1}] is not a positive, ordered interval")]
    BadRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub gamma: f64,
    pub slope: f64,
    pub residual_rms: f64,
    pub fit_range: (f64, f64),
    pub points_used: usize,
    pub slope_fixed: bool,
}

/// Fits `ln C̄ = ln γ + s ln N` over the points with `N` inside `range`.
///
/// With `fix_slope = Some(s)` only `γ` is estimated:
/// `γ = exp(mean(ln C̄ − s ln N))`.
pub fn fit_power_law(points: &[(f64, f64)], range: (f64, f64), fix_slope: Option<f64>) -> Result<ScalingFit, FitError> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(FitError::BadRange(lo, hi));
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, c)| *n >= lo && *n <= hi && *n > 0.0 && *c > 0.0)
        .map(|(n, c)| (n.ln(), c.ln()))
        .collect();
    if logs.len() < 3 {
        return Err(FitError::InsufficientPoints {
            lo,
            hi,
            found: logs.len(),
        });
    }
    let m = logs.len() as f64;

    let (slope, intercept) = match fix_slope {
        Some(s) => (s, logs.iter().map(|(x, y)| y - s * x).sum::<f64>() / m),
        None => {
            let mx = logs.iter().map(|(x, _)| x).sum::<f64>() / m;
            let my = logs.iter().map(|(_, y)| y).sum::<f64>() / m;
            let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
            let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
            if sxx == 0.0 {
                return Err(FitError::InsufficientPoints { lo, hi, found: 1 });
            }
            let s = sxy / sxx;
            (s, my - s * mx)
        }
    };
    let residual_rms = (logs
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();

    Ok(ScalingFit {
        gamma: intercept.exp(),
        slope,
        residual_rms,
        fit_range: range,
        points_used: logs.len(),
        slope_fixed: fix_slope.is_some(),
    })
}
