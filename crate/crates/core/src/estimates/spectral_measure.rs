//! Smoothed spectral measure `(2h)^{−1} ‖E_{√L}[λ−h, λ+h]‖_{p0→p0'}`.
//!
//! The window projector has kernel `Σ u_i(x) u_i(y)` over the eigenvalues of
//! `√L` in the window. `1→∞` is exact (`max |K|`), `2→2` is 1 for a nonzero
//! projector, and intermediate exponents are bracketed between the
//! interpolated endpoints and a test ensemble.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::fit::{least_squares, LinearFit};
use crate::calculus::SpectralDecomposition;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct SpectralMeasureEstimate {
    pub lambda: f64,
    pub half_width: f64,
    pub p0: f64,
    pub eigenvalue_count: usize,
    pub lower: f64,
    pub upper: f64,
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

fn lp(mu: &[f64], f: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        f.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    } else {
        f.iter().zip(mu).map(|(v, m)| v.abs().powf(p) * m).sum::<f64>().powf(1.0 / p)
    }
}

pub fn spectral_measure_norm(
    decomp: &SpectralDecomposition,
    lambda: f64,
    half_width: f64,
    p0: f64,
    seed: u64,
) -> Result<SpectralMeasureEstimate> {
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::invalid(format!("half-width must be positive, got {half_width}")));
    }
    if !(1.0..=2.0).contains(&p0) {
        return Err(Error::invalid(format!("p0 must lie in [1, 2], got {p0}")));
    }
    let (lo, hi) = (lambda - half_width, lambda + half_width);
    let idx: Vec<usize> = decomp
        .eigenvalues()
        .iter()
        .enumerate()
        .filter(|(_, l)| {
            let s = l.sqrt();
            s >= lo && s <= hi
        })
        .map(|(i, _)| i)
        .collect();
    let top = decomp.eigenvalues().last().map_or(0.0, |l| l.sqrt());
    if idx.is_empty() {
        if lo > top {
            return Ok(SpectralMeasureEstimate {
                lambda,
                half_width,
                p0,
                eigenvalue_count: 0,
                lower: 0.0,
                upper: 0.0,
            });
        }
        return Err(Error::EmptySpectralWindow { low: lo, high: hi });
    }
    let n = decomp.len();
    let u = decomp.vectors();
    let w = Mat::from_fn(n, idx.len(), |x, k| u[(x, idx[k])]);
    let k = &w * w.transpose();
    let n1 = (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .fold(0.0f64, |m, (x, y)| m.max(k[(x, y)].abs()));
    let scale = 1.0 / (2.0 * half_width);
    if p0 == 1.0 {
        return Ok(SpectralMeasureEstimate {
            lambda,
            half_width,
            p0,
            eigenvalue_count: idx.len(),
            lower: n1 * scale,
            upper: n1 * scale,
        });
    }
    if p0 == 2.0 {
        return Ok(SpectralMeasureEstimate {
            lambda,
            half_width,
            p0,
            eigenvalue_count: idx.len(),
            lower: scale,
            upper: scale,
        });
    }
    let theta = 2.0 / p0 - 1.0;
    let upper = n1.powf(theta);
    let pc = conjugate(p0);
    let mu = decomp.space().measure();
    let apply = |f: &[f64]| -> Vec<f64> {
        let c: Vec<f64> = (0..idx.len())
            .map(|j| (0..n).map(|y| w[(y, j)] * f[y] * mu[y]).sum())
            .collect();
        (0..n).map(|x| (0..idx.len()).map(|j| w[(x, j)] * c[j]).sum()).collect()
    };
    let mut best = 0.0f64;
    let mut probe = |f: &[f64]| {
        let d = lp(mu, f, p0);
        if d > 0.0 {
            best = best.max(lp(mu, &apply(f), pc) / d);
        }
    };
    let stride = n.div_ceil(256).max(1);
    let mut e = vec![0.0; n];
    for y in (0..n).step_by(stride) {
        e[y] = 1.0;
        probe(&e);
        e[y] = 0.0;
    }
    for j in 0..idx.len().min(8) {
        probe(&(0..n).map(|x| w[(x, j)]).collect::<Vec<_>>());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        let f: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        probe(&f);
    }
    Ok(SpectralMeasureEstimate {
        lambda,
        half_width,
        p0,
        eigenvalue_count: idx.len(),
        lower: best.min(upper) * scale,
        upper: upper * scale,
    })
}

/// Fits `log(value) = a + b log λ` over the estimates (upper bounds).
pub fn spectral_power_law(estimates: &[SpectralMeasureEstimate]) -> Result<LinearFit> {
    let pts: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.upper > 0.0)
        .map(|e| (e.lambda.ln(), e.upper.ln()))
        .collect();
    least_squares(&pts)
}

/// `n(1/p0 − 1/p0') − 1`.
pub fn restriction_exponent(dimension_n: f64, p0: f64) -> f64 {
    let inv_conj = 1.0 - 1.0 / p0;
    dimension_n * (1.0 / p0 - inv_conj) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{spectral_decompose, SelfAdjointOperator};
    use crate::space::{build_grid_space, Topology};
    use std::sync::Arc;

    fn torus(n: usize, h: f64) -> SpectralDecomposition {
        let s = Arc::new(build_grid_space(1, n, h, Topology::Torus).unwrap());
        spectral_decompose(&SelfAdjointOperator::second_difference(s).unwrap()).unwrap()
    }

    #[test]
    fn window_above_the_spectrum_is_zero() {
        let d = torus(32, 1.0);
        let e = spectral_measure_norm(&d, 10.0, 0.5, 1.0, 0).unwrap();
        assert_eq!(e.upper, 0.0);
    }

    #[test]
    fn empty_interior_window_is_an_error() {
        let d = torus(8, 1.0);
        // √λ values are 2 sin(πk/8); nothing lies in [0.1, 0.2].
        assert!(matches!(
            spectral_measure_norm(&d, 0.15, 0.05, 1.0, 0),
            Err(Error::EmptySpectralWindow { .. })
        ));
    }

    #[test]
    fn rank_one_window() {
        let d = torus(8, 1.0);
        // The top eigenvalue 4 (k = 4) is simple, √λ = 2.
        let h = 0.05;
        let e = spectral_measure_norm(&d, 2.0, h, 1.0, 0).unwrap();
        assert_eq!(e.eigenvalue_count, 1);
        let u = d.eigenvector(7);
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((e.upper - sup * sup / (2.0 * h)).abs() < 1e-12);
    }

    #[test]
    fn exponent_formula() {
        assert_eq!(restriction_exponent(1.0, 1.0), 0.0);
        assert_eq!(restriction_exponent(3.0, 1.0), 2.0);
        assert_eq!(restriction_exponent(2.0, 2.0), -1.0);
    }

    #[test]
    fn intermediate_bracket_is_ordered() {
        let d = torus(64, 1.0);
        let e = spectral_measure_norm(&d, 1.0, 0.2, 1.5, 3).unwrap();
        assert!(e.lower <= e.upper * (1.0 + 1e-9) && e.lower > 0.0);
    }
}
