//! Empirical constant of the restriction-type bound
//! `‖F(√L) P_{B(x,r)}‖_{p0→2} ≤ C V(x,r)^{1/2−1/p0} (Rr)^{n(1/p0−1/2)} ‖δ_R F‖_q`
//! for `supp F ⊂ [0, R]` and `r ≥ max(1/R, spacing)`.

use serde::Serialize;

use super::opnorm::{block_norm_p_to_2, KernelBlock, TestEnsemble};
use crate::calculus::SpectralDecomposition;
use crate::multiplier::{dilated_lq_norm, Multiplier};
use crate::space::Ball;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct RestrictionRow {
    pub center: usize,
    pub radius: f64,
    pub volume: f64,
    pub lhs_lower: f64,
    pub lhs_upper: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RestrictionReport {
    pub p0: f64,
    pub q: f64,
    pub r_cutoff: f64,
    pub dimension_n: f64,
    pub rows: Vec<RestrictionRow>,
    /// Balls skipped for `r < max(1/R, spacing)`.
    pub skipped: usize,
    /// Largest ratio over the sampled balls: an empirical constant only.
    pub empirical_constant: f64,
}

/// `V^{1/2−1/p0} (Rr)^{n(1/p0−1/2)}`.
pub fn restriction_prefactor(volume: f64, r: f64, big_r: f64, n: f64, p0: f64) -> f64 {
    volume.powf(0.5 - 1.0 / p0) * (big_r * r).powf(n * (1.0 / p0 - 0.5))
}

#[allow(clippy::too_many_arguments)]
pub fn restriction_constant(
    decomp: &SpectralDecomposition,
    f: &Multiplier,
    big_r: f64,
    p0: f64,
    q: f64,
    balls: &[Ball],
    dimension_n: f64,
    seed: u64,
) -> Result<RestrictionReport> {
    let support = f
        .support_radius()
        .ok_or_else(|| Error::invalid(format!("multiplier `{}` has no declared support", f.label())))?;
    if support > big_r * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("supp F reaches {support}, beyond R = {big_r}")));
    }
    if !(1.0..=2.0).contains(&p0) {
        return Err(Error::invalid(format!("p0 must lie in [1, 2], got {p0}")));
    }
    let space = decomp.space().clone();
    let g = decomp.multiplier_values(f)?;
    let fq = dilated_lq_norm(f, big_r, q)?;
    let min_r = (1.0 / big_r).max(space.min_spacing());
    let usable: Vec<Ball> = balls
        .iter()
        .copied()
        .filter(|b| b.radius() >= min_r * (1.0 - 1e-12))
        .collect();
    let skipped = balls.len() - usable.len();
    if skipped > 0 {
        log::warn!("restriction: skipped {skipped} balls with r < {min_r}");
    }
    let rows = crate::par::map(&usable, |ball| -> Result<RestrictionRow> {
        let members = space.ball_members(ball);
        let block = KernelBlock::from_spectrum(decomp, &g, members);
        let est = block_norm_p_to_2(&space, &block, p0, &TestEnsemble::standard(seed))?;
        let volume = space.ball_volume(ball);
        let rhs = restriction_prefactor(volume, ball.radius(), big_r, dimension_n, p0) * fq;
        Ok(RestrictionRow {
            center: ball.center(),
            radius: ball.radius(),
            volume,
            lhs_lower: est.lower,
            lhs_upper: est.upper,
            rhs,
            ratio: if rhs > 0.0 { est.upper / rhs } else { 0.0 },
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let empirical_constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(RestrictionReport {
        p0,
        q,
        r_cutoff: big_r,
        dimension_n,
        rows,
        skipped,
        empirical_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{spectral_decompose, SelfAdjointOperator};
    use crate::space::{build_grid_space, Topology};
    use std::sync::Arc;

    fn torus(n: usize) -> SpectralDecomposition {
        let s = Arc::new(build_grid_space(1, n, 1.0, Topology::Torus).unwrap());
        spectral_decompose(&SelfAdjointOperator::second_difference(s).unwrap()).unwrap()
    }

    #[test]
    fn zero_multiplier_has_zero_ratios() {
        let d = torus(64);
        let z = Multiplier::zero().with_support(1.0).unwrap();
        let balls = [Ball::new(0, 2.0).unwrap(), Ball::new(5, 4.0).unwrap()];
        let r = restriction_constant(&d, &z, 1.0, 1.0, 2.0, &balls, 1.0, 0).unwrap();
        assert!(r.rows.iter().all(|row| row.ratio == 0.0));
    }

    #[test]
    fn indicator_ratios_are_stable_in_r() {
        let d = torus(256);
        let big_r = 0.5;
        let f = Multiplier::indicator(big_r).unwrap();
        let balls: Vec<Ball> = [2.0, 4.0, 8.0].iter().map(|k| Ball::new(0, k / big_r).unwrap()).collect();
        let r = restriction_constant(&d, &f, big_r, 1.0, 2.0, &balls, 1.0, 0).unwrap();
        let ratios: Vec<f64> = r.rows.iter().map(|x| x.ratio).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo <= 2.0, "{ratios:?}");
    }

    #[test]
    fn small_balls_are_skipped_and_unsupported_symbols_refused() {
        let d = torus(32);
        let f = Multiplier::indicator(0.25).unwrap();
        let balls = [Ball::new(0, 1.0).unwrap(), Ball::new(0, 8.0).unwrap()];
        let r = restriction_constant(&d, &f, 0.25, 1.0, 2.0, &balls, 1.0, 0).unwrap();
        assert_eq!(r.skipped, 1);
        assert!(restriction_constant(&d, &Multiplier::one(), 1.0, 1.0, 2.0, &balls, 1.0, 0).is_err());
    }

    #[test]
    fn larger_q_does_not_shrink_the_ratio_much() {
        let d = torus(128);
        let f = Multiplier::bochner_riesz(1.0, 1.0).unwrap();
        let balls = [Ball::new(0, 2.0).unwrap(), Ball::new(0, 6.0).unwrap()];
        let a = restriction_constant(&d, &f, 1.0, 1.0, 2.0, &balls, 1.0, 0).unwrap();
        let b = restriction_constant(&d, &f, 1.0, 1.0, 4.0, &balls, 1.0, 0).unwrap();
        // On [0,1], ‖G‖_2 ≤ ‖G‖_4, so the denominator can only grow.
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!(y.rhs >= x.rhs * (1.0 - 1e-9));
            assert!(y.ratio <= x.ratio * (1.0 + 1e-9));
        }
    }
}
