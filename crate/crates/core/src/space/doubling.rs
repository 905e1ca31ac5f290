//! Least-exponent fit of `V(x, λr) ≤ C λ^n V(x, r)`.
//!
//! For a fixed exponent `n` the best constant over the samples is
//! `C(n) = max V(x,λr) / (λ^n V(x,r))`. Raising `n` trades constant for
//! exponent, so "the least `n` with a finite `C`" is not well posed on a
//! finite space: every `n ≥ 0` admits some `C`. We take the least `n` on the
//! grid at which the large dilations stop driving the constant, i.e. where
//! `C(n)` over all samples equals `C(n)` over the samples with
//! `λ ≤ max(2, λ_min)`. Past that point the doubling constant alone explains
//! the growth of volumes.

use serde::Serialize;

use super::MetricMeasureSpace;
use crate::{Error, Result};

pub const DIMENSION_RESOLUTION: f64 = 0.05;
const MAX_DIMENSION: f64 = 64.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingFit {
    pub dimension_n: f64,
    pub constant_c: f64,
    /// RMS of `log V(x,λr)/V(x,r) − n log λ − log C` over the samples.
    pub residual: f64,
    pub samples: usize,
}

impl DoublingFit {
    /// Whether `V(x, λr) ≤ C λ^n V(x, r)` holds for one triple.
    pub fn holds(&self, space: &MetricMeasureSpace, x: usize, r: f64, lambda: f64) -> bool {
        let lhs = space.volume(x, lambda * r);
        let rhs = self.constant_c * lambda.powf(self.dimension_n) * space.volume(x, r);
        lhs <= rhs * (1.0 + 1e-12)
    }
}

struct Sample {
    log_ratio: f64,
    log_lambda: f64,
    small: bool,
}

fn log_constant(samples: &[Sample], n: f64, small_only: bool) -> f64 {
    samples
        .iter()
        .filter(|s| !small_only || s.small)
        .map(|s| s.log_ratio - n * s.log_lambda)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Radii outside `[min spacing, diameter]` and dilations `λ < 1` are dropped.
pub fn fit_doubling_dimension(
    space: &MetricMeasureSpace,
    centers: &[usize],
    radii: &[f64],
    lambdas: &[f64],
) -> Result<DoublingFit> {
    if space.len() < 2 {
        return Err(Error::DegenerateSpace("a single point has no scale".into()));
    }
    if let Some(&x) = centers.iter().find(|&&x| x >= space.len()) {
        return Err(Error::invalid(format!("center {x} out of range")));
    }
    let (lo, hi) = (space.min_spacing(), space.diameter());
    let radii: Vec<f64> = radii
        .iter()
        .copied()
        .filter(|&r| r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12))
        .collect();
    let lambdas: Vec<f64> = lambdas.iter().copied().filter(|&l| l >= 1.0).collect();
    if centers.is_empty() || radii.is_empty() || lambdas.is_empty() {
        return Err(Error::DegenerateSpace(
            "no usable (center, radius, dilation) samples".into(),
        ));
    }
    let small_cut = lambdas.iter().copied().fold(f64::INFINITY, f64::min).max(2.0);

    let per_center = crate::par::map(centers, |&x| {
        let mut out = Vec::with_capacity(radii.len() * lambdas.len());
        for &r in &radii {
            let v = space.volume(x, r);
            for &l in &lambdas {
                out.push(Sample {
                    log_ratio: (space.volume(x, l * r) / v).ln(),
                    log_lambda: l.ln(),
                    small: l <= small_cut,
                });
            }
        }
        out
    });
    let samples: Vec<Sample> = per_center.into_iter().flatten().collect();

    let steps = (MAX_DIMENSION / DIMENSION_RESOLUTION) as usize;
    let mut n = MAX_DIMENSION;
    for k in 0..=steps {
        let cand = k as f64 * DIMENSION_RESOLUTION;
        let all = log_constant(&samples, cand, false);
        let small = log_constant(&samples, cand, true);
        if all <= small + 1e-12 {
            n = cand;
            break;
        }
    }
    let log_c = log_constant(&samples, n, false).max(0.0);
    let residual = (samples
        .iter()
        .map(|s| (s.log_ratio - n * s.log_lambda - log_c).powi(2))
        .sum::<f64>()
        / samples.len() as f64)
        .sqrt();
    Ok(DoublingFit {
        dimension_n: n,
        constant_c: log_c.exp(),
        residual,
        samples: samples.len(),
    })
}

/// Default sample grids used by the scenarios: `k` evenly spread centers and
/// the standard radius and dilation ladders.
pub fn default_fit(space: &MetricMeasureSpace, centers: usize) -> Result<DoublingFit> {
    let n = space.len();
    let k = centers.clamp(1, n);
    let centers: Vec<usize> = (0..k).map(|i| i * n / k).collect();
    let radii = [1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0];
    let h = space.min_spacing();
    let radii: Vec<f64> = radii.iter().map(|r| r * h).collect();
    let lambdas = [1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 16.0];
    fit_doubling_dimension(space, &centers, &radii, &lambdas)
}
