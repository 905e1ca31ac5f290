//! Hardy norms `‖f‖_{H^p_L} = ‖S_{h,K} f‖_{L^p}` and ensemble lower
//! estimates of `‖F(√L)‖_{H^p_L → H^p_L}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::square::{lp_norm, SquareFunction};
use crate::calculus::SpectralDecomposition;
use crate::multiplier::Multiplier;
use crate::space::Ball;
use crate::{Error, Result};

/// `K` used by the Hardy norm: 1 for `p ≤ 2`, `⌊n/4⌋ + 1` above.
pub fn default_k(p: f64, dimension_n: f64) -> u32 {
    if p <= 2.0 {
        1
    } else {
        (dimension_n / 4.0).floor() as u32 + 1
    }
}

/// Order of the mollifier `(I − e^{−r²L})^M` on atoms: `⌊(n/2)(1/p − 1/2)⌋ + 1`.
pub fn atom_order(p: f64, dimension_n: f64) -> u32 {
    (0.5 * dimension_n * (1.0 / p - 0.5)).max(0.0).floor() as u32 + 1
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p must lie in (0, ∞), got {p}")));
    }
    Ok(())
}

/// `‖S_{h,K} f‖_{L^p(μ)}` with the engine's `K`.
pub fn hardy_norm(engine: &SquareFunction, f: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let s = engine.evaluate(f)?;
    Ok(lp_norm(engine.decomp().space().measure(), &s.values, p))
}

#[derive(Clone, Debug, Serialize)]
pub struct HardyRatio {
    pub ratio: f64,
    pub per_member: Vec<f64>,
    pub argmax: usize,
}

/// Hardy norms of the (range-projected) ensemble members.
pub fn ensemble_norms(engine: &SquareFunction, ensemble: &[Vec<f64>], p: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    if ensemble.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    if let Some(k) = ensemble.iter().position(|f| f.iter().all(|&v| v == 0.0)) {
        return Err(Error::invalid(format!("ensemble member {k} is identically zero")));
    }
    let mu = engine.decomp().space().measure();
    crate::par::map(ensemble, |f| -> Result<f64> {
        let s = engine.evaluate(f)?;
        Ok(lp_norm(mu, &s.values, p))
    })
    .into_iter()
    .collect()
}

/// `max_f ‖F(√L) f‖_{H^p_L} / ‖f‖_{H^p_L}`, a lower estimate of the operator
/// norm. `denominators` may carry precomputed [`ensemble_norms`].
pub fn hardy_operator_ratio(
    engine: &SquareFunction,
    f: &Multiplier,
    p: f64,
    ensemble: &[Vec<f64>],
    denominators: Option<&[f64]>,
) -> Result<HardyRatio> {
    let owned;
    let den = match denominators {
        Some(d) if d.len() == ensemble.len() => d,
        Some(d) => {
            return Err(Error::DimensionMismatch {
                expected: ensemble.len(),
                got: d.len(),
            })
        }
        None => {
            owned = ensemble_norms(engine, ensemble, p)?;
            &owned
        }
    };
    if ensemble.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    let decomp = engine.decomp();
    let g = decomp.multiplier_values(f)?;
    let mu = decomp.space().measure();
    let per_member = crate::par::map_range(ensemble.len(), |k| -> Result<f64> {
        let image = decomp.apply_values(&g, &ensemble[k])?;
        let s = engine.evaluate(&image)?;
        if den[k] == 0.0 {
            return Err(Error::invalid(format!("ensemble member {k} has zero Hardy norm")));
        }
        Ok(lp_norm(mu, &s.values, p) / den[k])
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let (argmax, ratio) = per_member
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (k, v)| if v > b.1 { (k, v) } else { b });
    Ok(HardyRatio {
        ratio,
        per_member,
        argmax,
    })
}

/// Which test vectors to build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    /// Ball centers for atoms and bumps.
    #[serde(default = "default_centers")]
    pub centers: Vec<usize>,
    /// Radii in units of the smallest distance.
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_true")]
    pub atoms: bool,
    #[serde(default = "default_true")]
    pub bumps: bool,
    #[serde(default = "default_random")]
    pub random: usize,
}

fn default_centers() -> Vec<usize> {
    vec![0]
}
fn default_radii() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}
fn default_true() -> bool {
    true
}
fn default_random() -> usize {
    4
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            centers: default_centers(),
            radii: default_radii(),
            atoms: true,
            bumps: true,
            random: default_random(),
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::invalid("ensemble radii must be positive"));
        }
        if !self.atoms && !self.bumps && self.random == 0 {
            return Err(Error::invalid("ensemble spec selects no members"));
        }
        if (self.atoms || self.bumps) && (self.centers.is_empty() || self.radii.is_empty()) {
            return Err(Error::invalid("atoms and bumps need centers and radii"));
        }
        Ok(())
    }

    /// Builds the members, all projected onto the range of `L`; members
    /// that vanish after projection are dropped.
    pub fn build(&self, decomp: &SpectralDecomposition, p: f64, dimension_n: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let h = decomp.space().min_spacing();
        let mut out = Vec::new();
        for &c in &self.centers {
            if c >= decomp.len() {
                return Err(Error::invalid(format!("center {c} is not a point of the space")));
            }
            for &k in &self.radii {
                let ball = Ball::new(c, k * h)?;
                if self.atoms {
                    out.push(atom(decomp, &ball, atom_order(p, dimension_n))?);
                }
                if self.bumps {
                    out.push(decomp.project_range(&bump(decomp, &ball))?);
                }
            }
        }
        out.extend(random_range_vectors(decomp, self.random, seed)?);
        let scale = out.iter().map(|f| decomp.norm(f)).fold(0.0, f64::max);
        out.retain(|f| decomp.norm(f) > 1e-12 * scale);
        if out.is_empty() {
            return Err(Error::invalid("every ensemble member lies in the null space"));
        }
        Ok(out)
    }
}

/// `(I − e^{−r²L})^M 1_B`.
pub fn atom(decomp: &SpectralDecomposition, ball: &Ball, m: u32) -> Result<Vec<f64>> {
    let space = decomp.space();
    let mut f = vec![0.0; space.len()];
    for y in space.ball_members(ball) {
        f[y] = 1.0;
    }
    let r2 = ball.radius().powi(2);
    let g: Vec<f64> = decomp
        .eigenvalues()
        .iter()
        .map(|&l| (-(-r2 * l).exp_m1()).powi(m as i32))
        .collect();
    decomp.apply_values(&g, &f)
}

/// `(1 − (d/r)²)²₊` around the ball's center.
pub fn bump(decomp: &SpectralDecomposition, ball: &Ball) -> Vec<f64> {
    decomp
        .space()
        .distances_from(ball.center())
        .into_iter()
        .map(|d| {
            let u = d / ball.radius();
            if u < 1.0 {
                (1.0 - u * u).powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

/// Seeded uniform `[−1, 1]` vectors projected onto the range.
pub fn random_range_vectors(decomp: &SpectralDecomposition, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let f: Vec<f64> = (0..decomp.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
            decomp.project_range(&f)
        })
        .collect()
}
