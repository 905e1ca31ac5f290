//! Finite speed of propagation and Davies-Gaffney checks.
//!
//! Discrete wave kernels are never exactly supported in the light cone, so
//! support is measured in a thresholded sense: the effective radius is the
//! smallest `ρ` with at most `mass_tol` of each column's `L²(μ)` mass outside
//! `B(source, ρ)`. The cone passes when `ρ ≤ t (1 + slack)` with
//! `slack = max(0.1, 2·spacing/t)`.

use faer::Mat;
use serde::Serialize;

use super::kernel::{wave_cosine, KernelMatrix};
use super::spectral::SpectralDecomposition;
use crate::space::MetricMeasureSpace;
use crate::{Error, Result};

pub const DEFAULT_MASS_TOL: f64 = 1e-3;

/// Relative cone slack for a given time and grid spacing.
pub fn cone_slack(t: f64, spacing: f64) -> f64 {
    (2.0 * spacing / t).max(0.1)
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteSpeedReport {
    pub t: f64,
    pub mass_tol: f64,
    pub effective_radius: f64,
    /// Largest column tail fraction outside `B(source, t(1 + slack))`.
    pub worst_tail_in_cone: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Largest over columns of the thresholded support radius.
pub fn kernel_support_radius(kernel: &KernelMatrix, mass_tol: f64) -> Result<f64> {
    check_tol(mass_tol)?;
    let radii = crate::par::map_range(kernel.len(), |y| kernel.column_support_radius(y, mass_tol));
    Ok(radii.into_iter().fold(0.0, f64::max))
}

/// Largest over columns of the mass fraction outside `radius`.
pub fn kernel_tail_fraction(kernel: &KernelMatrix, radius: f64) -> f64 {
    crate::par::map_range(kernel.len(), |y| kernel.column_tail_fraction(y, radius))
        .into_iter()
        .fold(0.0, f64::max)
}

fn check_tol(mass_tol: f64) -> Result<()> {
    if !(mass_tol > 0.0 && mass_tol < 1.0) {
        return Err(Error::invalid(format!("mass tolerance must lie in (0,1), got {mass_tol}")));
    }
    Ok(())
}

pub fn verify_finite_speed(decomp: &SpectralDecomposition, t: f64, mass_tol: f64) -> Result<FiniteSpeedReport> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("wave time must be positive, got {t}")));
    }
    check_tol(mass_tol)?;
    let kernel = wave_cosine(decomp, t)?;
    let effective_radius = kernel_support_radius(&kernel, mass_tol)?;
    let slack = cone_slack(t, decomp.space().min_spacing());
    let worst_tail_in_cone = kernel_tail_fraction(&kernel, t * (1.0 + slack));
    Ok(FiniteSpeedReport {
        t,
        mass_tol,
        effective_radius,
        worst_tail_in_cone,
        slack,
        passed: effective_radius <= t * (1.0 + slack) * (1.0 + crate::space::RADIUS_TOL),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DaviesGaffneySample {
    pub pair: usize,
    pub distance: f64,
    pub t: f64,
    /// `‖P_{U₂} e^{−tL} P_{U₁}‖_{2→2}`.
    pub norm: f64,
    pub used_in_fit: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DaviesGaffneyReport {
    pub samples: Vec<DaviesGaffneySample>,
    /// `c` in `C exp(−dist²/(c t))`.
    pub fitted_c: f64,
    pub fitted_constant: f64,
    /// `max norm / (C exp(−dist²/(c t)))` over the fitted samples.
    pub worst_violation: f64,
    /// Residual RMS of the natural-log fit.
    pub residual: f64,
}

/// Values below this are at rounding level and skipped in the fit.
const DG_FLOOR: f64 = 1e-12;

/// `σ_max(D₂^{1/2} K[U₂,U₁] D₁^{1/2})`: the `L²(μ)` norm of `P_{U₂} T P_{U₁}`.
/// `entry(a, b)` is `K(rows[a], cols[b])`.
pub(crate) fn restricted_norm_2(
    space: &MetricMeasureSpace,
    rows: &[usize],
    cols: &[usize],
    entry: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    if rows.is_empty() || cols.is_empty() {
        return Ok(0.0);
    }
    let mu = space.measure();
    let m = Mat::from_fn(rows.len(), cols.len(), |a, b| {
        mu[rows[a]].sqrt() * entry(a, b) * mu[cols[b]].sqrt()
    });
    let sv = m
        .singular_values()
        .map_err(|e| Error::Eigensolver(format!("singular values: {e:?}")))?;
    Ok(sv.into_iter().fold(0.0, f64::max))
}

pub fn verify_davies_gaffney(
    decomp: &SpectralDecomposition,
    set_pairs: &[(Vec<usize>, Vec<usize>)],
    t_grid: &[f64],
) -> Result<DaviesGaffneyReport> {
    let space = decomp.space().clone();
    if set_pairs.is_empty() || t_grid.is_empty() {
        return Err(Error::InsufficientData("need at least one set pair and one time".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::invalid(format!("heat time must be positive, got {t}")));
    }
    let mut distances = Vec::with_capacity(set_pairs.len());
    for (k, (u1, u2)) in set_pairs.iter().enumerate() {
        if u1.is_empty() || u2.is_empty() {
            return Err(Error::invalid(format!("set pair {k} has an empty set")));
        }
        let d = space.set_distance(u1, u2);
        if d <= 0.0 {
            return Err(Error::invalid(format!(
                "set pair {k} overlaps or touches (distance {d}); sets must be separated"
            )));
        }
        distances.push(d);
    }
    let u = decomp.vectors();
    let lambdas = decomp.eigenvalues();
    let cells: Vec<(usize, f64)> = (0..set_pairs.len())
        .flat_map(|p| t_grid.iter().map(move |&t| (p, t)))
        .collect();
    let norms = crate::par::map(&cells, |&(p, t)| -> Result<f64> {
        let (u1, u2) = &set_pairs[p];
        let g: Vec<f64> = lambdas.iter().map(|l| (-t * l).exp()).collect();
        let left = Mat::from_fn(u2.len(), g.len(), |a, i| u[(u2[a], i)] * g[i]);
        let right = Mat::from_fn(g.len(), u1.len(), |i, b| u[(u1[b], i)]);
        let k = &left * &right;
        restricted_norm_2(&space, u2, u1, |a, b| k[(a, b)])
    });
    let mut samples = Vec::with_capacity(cells.len());
    for (&(p, t), norm) in cells.iter().zip(norms) {
        let norm = norm?;
        samples.push(DaviesGaffneySample {
            pair: p,
            distance: distances[p],
            t,
            norm,
            used_in_fit: norm > DG_FLOOR,
        });
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.used_in_fit)
        .map(|s| (s.distance * s.distance / s.t, s.norm.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} samples above the numerical floor",
            pts.len()
        )));
    }
    let fit = crate::estimates::least_squares(&pts)?;
    if fit.slope >= 0.0 {
        return Err(Error::InsufficientData(format!(
            "heat correlations do not decay with distance (slope {})",
            fit.slope
        )));
    }
    let fitted_c = -1.0 / fit.slope;
    let fitted_constant = fit.intercept.exp();
    let worst_violation = samples
        .iter()
        .filter(|s| s.used_in_fit)
        .map(|s| s.norm / (fitted_constant * (-(s.distance * s.distance) / (fitted_c * s.t)).exp()))
        .fold(0.0, f64::max);
    Ok(DaviesGaffneyReport {
        samples,
        fitted_c,
        fitted_constant,
        worst_violation,
        residual: fit.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{spectral_decompose, SelfAdjointOperator};
    use crate::space::{build_grid_space, Ball, Topology};
    use std::sync::Arc;

    fn torus(n: usize, h: f64) -> SpectralDecomposition {
        let s = Arc::new(build_grid_space(1, n, h, Topology::Torus).unwrap());
        spectral_decompose(&SelfAdjointOperator::second_difference(s).unwrap()).unwrap()
    }

    #[test]
    fn short_times_stay_at_the_source() {
        let d = torus(64, 1.0);
        let r = verify_finite_speed(&d, 0.05, 1e-3).unwrap();
        assert!(r.effective_radius <= 1.0);
        assert!(r.passed);
    }

    #[test]
    fn wave_cone_at_t5() {
        let d = torus(256, 1.0);
        let k = wave_cosine(&d, 5.0).unwrap();
        assert!(kernel_tail_fraction(&k, 6.0) <= 1e-3);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let d = torus(32, 1.0);
        let a = vec![0, 1, 2];
        assert!(verify_davies_gaffney(&d, &[(a.clone(), a.clone())], &[1.0]).is_err());
        assert!(verify_davies_gaffney(&d, &[(a, vec![2, 3])], &[1.0]).is_err());
    }

    #[test]
    fn gaussian_scaling_of_heat_correlations() {
        let d = torus(256, 1.0);
        let s = d.space().clone();
        let set = |c: usize| s.ball_members(&Ball::new(c, 2.0).unwrap());
        let pairs = vec![(set(0), set(20))];
        let ts: Vec<f64> = (0..9).map(|k| 2f64.powf(k as f64 * 0.5)).collect();
        let r = verify_davies_gaffney(&d, &pairs, &ts).unwrap();
        assert!(r.fitted_c > 2.0 && r.fitted_c < 8.0, "{}", r.fitted_c);
        assert!(r.worst_violation >= 1.0);
    }

    #[test]
    fn long_time_limit_is_the_constant_projection() {
        let d = torus(16, 1.0);
        let k = crate::calculus::heat_operator(&d, 1e4).unwrap();
        // e^{−tL} → (1/|X|) 1 ⊗ 1 with respect to μ ≡ 1.
        assert!((k.get(0, 9) - 1.0 / 16.0).abs() < 1e-12);
    }
}
