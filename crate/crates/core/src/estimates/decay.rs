//! Decay in `j` of `‖P_{B(x,2^j r)^c} F(√L) P_{B(x,r)}‖_{p0→2}` and of the
//! annulus quantity `‖F(√L)(I − e^{−r²L})^M f‖_{L²(2^jB∖2^{j−1}B)} / ‖f‖_{L²(B)}`.

use serde::Serialize;

use super::fit::{bootstrap_slope_width, least_squares, BOOTSTRAP_RESAMPLES};
use super::opnorm::{block_norm_p_to_2, KernelBlock, TestEnsemble};
use crate::calculus::{FiniteSpeedReport, SpectralDecomposition};
use crate::multiplier::{besov_norm, LineFunction, LineGrid, Multiplier};
use crate::space::{Ball, MetricMeasureSpace};
use crate::{Error, Result};

/// Relative level below which measured norms are rounding noise.
pub const FLOOR_REL: f64 = 1e-12;
/// Points within this factor of the floor are left out of fits.
pub const FLOOR_MARGIN: f64 = 10.0;
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayRegime {
    /// `rR ≥ 1`
    LargeBall,
    /// `rR < 1`
    SmallBall,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub j: u32,
    pub lower: f64,
    pub upper: f64,
    pub prefactor: f64,
    /// `upper / (prefactor · ‖δ_R F‖)`, when the smoothness norm is known.
    pub normalized: Option<f64>,
    pub above_floor: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFitReport {
    pub quantity: String,
    pub center: usize,
    pub radius: f64,
    pub regime: DecayRegime,
    pub rows: Vec<DecayRow>,
    /// `−s`.
    pub model_slope: f64,
    /// Least-squares slope of `log2(upper)` against `j`.
    pub fitted_slope: f64,
    pub intercept: f64,
    /// RMS residual in log2 units.
    pub residual: f64,
    /// Bootstrap 95% half-width of the slope.
    pub slope_width: f64,
    pub floor: f64,
    pub fitted_points: usize,
    /// Non-increasing in `j` among points above the floor.
    pub monotone: bool,
    pub smoothness_norm: Option<f64>,
}

fn regime(r: f64, big_r: f64) -> DecayRegime {
    if r * big_r >= 1.0 {
        DecayRegime::LargeBall
    } else {
        DecayRegime::SmallBall
    }
}

/// Right-hand side prefactor without the smoothness norm of `δ_R F`.
pub fn decay_prefactor(
    space: &MetricMeasureSpace,
    ball: &Ball,
    big_r: f64,
    j: u32,
    s: f64,
    dimension_n: f64,
    p0: f64,
) -> f64 {
    let r = ball.radius();
    let scale = (2f64.powi(j as i32) * r * big_r).powf(-s);
    match regime(r, big_r) {
        DecayRegime::LargeBall => {
            space.ball_volume(ball).powf(0.5 - 1.0 / p0)
                * (big_r * r).powf(dimension_n * (1.0 / p0 - 0.5))
                * scale
        }
        DecayRegime::SmallBall => space.volume(ball.center(), 1.0 / big_r).powf(0.5 - 1.0 / p0) * scale,
    }
}

/// `‖δ_R F‖_{B^{q,1}_s}` on a line grid, `None` when the transform is not
/// resolved.
fn smoothness_norm(f: &Multiplier, big_r: f64, s: f64, q: f64) -> Option<f64> {
    let g = f.dilate(big_r).ok()?;
    let line = LineFunction::sample(&g, LineGrid::for_support(1.0, 1.0 / 64.0).ok()?).ok()?;
    match besov_norm(&line, s, q) {
        Ok(b) => Some(b.value),
        Err(e) => {
            log::warn!("smoothness norm of δ_R F unavailable: {e}");
            None
        }
    }
}

struct Fit {
    slope: f64,
    intercept: f64,
    residual: f64,
    width: f64,
    points: usize,
    monotone: bool,
}

fn fit_rows(js: &[u32], values: &[f64], floor: f64, seed: u64) -> Result<Fit> {
    let pts: Vec<(f64, f64)> = js
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > FLOOR_MARGIN * floor)
        .map(|(&j, &v)| (j as f64, v.log2()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} of {} values lie above the numerical floor; at least {MIN_FIT_POINTS} are needed",
            pts.len(),
            values.len()
        )));
    }
    let lf = least_squares(&pts)?;
    let width = bootstrap_slope_width(&pts, &lf, BOOTSTRAP_RESAMPLES, seed)?;
    let monotone = pts.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    Ok(Fit {
        slope: lf.slope,
        intercept: lf.intercept,
        residual: lf.residual,
        width,
        points: pts.len(),
        monotone,
    })
}

fn check_j_range(j_range: &[u32]) -> Result<()> {
    if j_range.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "j range has {} values, at least {MIN_FIT_POINTS} are needed",
            j_range.len()
        )));
    }
    if j_range.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("j range must be strictly increasing"));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn offdiag_decay(
    decomp: &SpectralDecomposition,
    finite_speed: &FiniteSpeedReport,
    f: &Multiplier,
    big_r: f64,
    ball: &Ball,
    p0: f64,
    q: f64,
    s: f64,
    j_range: &[u32],
    dimension_n: f64,
    seed: u64,
) -> Result<DecayFitReport> {
    if !finite_speed.passed {
        return Err(Error::FiniteSpeedNotVerified(format!(
            "wave propagation at t = {} left a tail of {:.3e} outside the cone",
            finite_speed.t, finite_speed.worst_tail_in_cone
        )));
    }
    let support = f
        .support_radius()
        .ok_or_else(|| Error::invalid(format!("multiplier `{}` has no declared support", f.label())))?;
    if support > big_r * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("supp F reaches {support}, beyond R = {big_r}")));
    }
    let s_min = (dimension_n * (1.0 / p0 - 0.5) - 1.0).max(0.0);
    if s <= s_min {
        return Err(Error::invalid(format!("s = {s} must exceed {s_min}")));
    }
    check_j_range(j_range)?;
    let space = decomp.space().clone();
    let g = decomp.multiplier_values(f)?;
    let block = KernelBlock::from_spectrum(decomp, &g, space.ball_members(ball));
    let ensemble = TestEnsemble::standard(seed);
    let full = block_norm_p_to_2(&space, &block, p0, &ensemble)?.upper;
    let floor = FLOOR_REL * full;

    let mut nonempty = Vec::new();
    for &j in j_range {
        let outer = Ball::new(ball.center(), ball.radius() * 2f64.powi(j as i32))?;
        let rows = space.exterior_members(&outer);
        if !rows.is_empty() {
            nonempty.push((j, rows));
        }
    }
    if nonempty.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "only {} nonempty exteriors in the j range",
            nonempty.len()
        )));
    }
    let norms = crate::par::map(&nonempty, |(_, rows)| {
        block_norm_p_to_2(&space, &block.select_rows(rows), p0, &ensemble)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let smooth = smoothness_norm(f, big_r, s, q);
    let rows: Vec<DecayRow> = nonempty
        .iter()
        .zip(&norms)
        .map(|((j, _), est)| {
            let prefactor = decay_prefactor(&space, ball, big_r, *j, s, dimension_n, p0);
            DecayRow {
                j: *j,
                lower: est.lower,
                upper: est.upper,
                prefactor,
                normalized: smooth.map(|b| est.upper / (prefactor * b)),
                above_floor: est.upper > FLOOR_MARGIN * floor,
            }
        })
        .collect();
    let js: Vec<u32> = rows.iter().map(|r| r.j).collect();
    let ups: Vec<f64> = rows.iter().map(|r| r.upper).collect();
    let fit = fit_rows(&js, &ups, floor, seed)?;
    Ok(DecayFitReport {
        quantity: format!("off-diagonal p0={p0}"),
        center: ball.center(),
        radius: ball.radius(),
        regime: regime(ball.radius(), big_r),
        rows,
        model_slope: -s,
        fitted_slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        slope_width: fit.width,
        floor,
        fitted_points: fit.points,
        monotone: fit.monotone,
        smoothness_norm: smooth,
    })
}

/// Point masses at every point of the ball.
pub fn atom_ensemble(space: &MetricMeasureSpace, ball: &Ball) -> Vec<Vec<f64>> {
    space
        .ball_members(ball)
        .into_iter()
        .map(|y| {
            let mut f = vec![0.0; space.len()];
            f[y] = 1.0;
            f
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn criterion_check(
    decomp: &SpectralDecomposition,
    f: &Multiplier,
    m: u32,
    ball: &Ball,
    ensemble: &[Vec<f64>],
    j_range: &[u32],
    s: f64,
    seed: u64,
) -> Result<DecayFitReport> {
    if m < 1 {
        return Err(Error::invalid("M must be at least 1"));
    }
    if ensemble.is_empty() {
        return Err(Error::invalid("empty test ensemble"));
    }
    check_j_range(j_range)?;
    if j_range[0] < 1 {
        return Err(Error::invalid("annuli start at j = 1"));
    }
    let space = decomp.space().clone();
    let n = space.len();
    let inside = space.ball_members(ball);
    let mut in_ball = vec![false; n];
    for &y in &inside {
        in_ball[y] = true;
    }
    for (k, g) in ensemble.iter().enumerate() {
        if g.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: g.len() });
        }
        if let Some(y) = (0..n).find(|&y| g[y] != 0.0 && !in_ball[y]) {
            return Err(Error::invalid(format!("ensemble member {k} is nonzero at {y}, outside the ball")));
        }
    }
    let r2 = ball.radius().powi(2);
    let symbol: Vec<f64> = decomp
        .eigenvalues()
        .iter()
        .map(|&l| f.eval(l.sqrt()) * (1.0 - (-r2 * l).exp()).powi(m as i32))
        .collect();
    if let Some(bad) = symbol.iter().position(|v| !v.is_finite()) {
        return Err(Error::MultiplierUndefined {
            label: f.label().into(),
            eigenvalue: decomp.eigenvalues()[bad],
            sqrt_eigenvalue: decomp.eigenvalues()[bad].sqrt(),
        });
    }
    let annuli: Vec<(u32, Vec<usize>)> = j_range
        .iter()
        .map(|&j| (j, space.annulus_members(ball, j)))
        .filter(|(_, a)| !a.is_empty())
        .collect();
    if annuli.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!("only {} nonempty annuli", annuli.len())));
    }
    let mu = space.measure();
    let l2 = |v: &[f64], set: &[usize]| set.iter().map(|&x| v[x] * v[x] * mu[x]).sum::<f64>().sqrt();
    let per_member = crate::par::map(ensemble, |g| -> Result<(Vec<f64>, f64)> {
        let den = l2(g, &inside);
        let tg = decomp.apply_values(&symbol, g)?;
        let whole = decomp.norm(&tg) / den;
        Ok((annuli.iter().map(|(_, a)| l2(&tg, a) / den).collect(), whole))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let worst: Vec<f64> = (0..annuli.len())
        .map(|k| per_member.iter().map(|(v, _)| v[k]).fold(0.0, f64::max))
        .collect();
    let floor = FLOOR_REL * per_member.iter().map(|(_, w)| *w).fold(0.0, f64::max);
    let rows: Vec<DecayRow> = annuli
        .iter()
        .zip(&worst)
        .map(|((j, _), &v)| DecayRow {
            j: *j,
            lower: v,
            upper: v,
            prefactor: 2f64.powf(-s * *j as f64),
            normalized: Some(v * 2f64.powf(s * *j as f64)),
            above_floor: v > FLOOR_MARGIN * floor,
        })
        .collect();
    let js: Vec<u32> = rows.iter().map(|r| r.j).collect();
    let fit = fit_rows(&js, &worst, floor, seed)?;
    Ok(DecayFitReport {
        quantity: format!("annulus criterion M={m}"),
        center: ball.center(),
        radius: ball.radius(),
        regime: DecayRegime::LargeBall,
        rows,
        model_slope: -s,
        fitted_slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        slope_width: fit.width,
        floor,
        fitted_points: fit.points,
        monotone: fit.monotone,
        smoothness_norm: None,
    })
}
