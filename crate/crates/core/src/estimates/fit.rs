use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the residuals.
    pub residual: f64,
}

pub fn least_squares(pts: &[(f64, f64)]) -> Result<LinearFit> {
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!("{} points cannot fix a line", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all abscissae coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        residual,
    })
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Half-width of the central 95% interval of slopes refitted on
/// `fit + resampled residuals`.
pub fn bootstrap_slope_width(pts: &[(f64, f64)], fit: &LinearFit, resamples: usize, seed: u64) -> Result<f64> {
    if pts.len() < 3 {
        return Ok(f64::INFINITY);
    }
    let residuals: Vec<f64> = pts.iter().map(|p| p.1 - fit.slope * p.0 - fit.intercept).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let sample: Vec<(f64, f64)> = pts
            .iter()
            .map(|p| {
                let e = residuals[rng.random_range(0..residuals.len())];
                (p.0, fit.slope * p.0 + fit.intercept + e)
            })
            .collect();
        slopes.push(least_squares(&sample)?.slope);
    }
    slopes.sort_by(f64::total_cmp);
    let lo = slopes[(0.025 * resamples as f64) as usize];
    let hi = slopes[((0.975 * resamples as f64) as usize).min(resamples - 1)];
    Ok(0.5 * (hi - lo))
}
