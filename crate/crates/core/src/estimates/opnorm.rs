//! Brackets for `‖P_E T P_F‖_{p0→2}` with `T` given by a kernel w.r.t. `μ`.
//!
//! `p0 = 1` and `p0 = 2` are exact: the largest column norm
//! `sup_y ‖K(·,y)‖_{L²(μ)}`, and the top singular value of
//! `D^{1/2} K D^{1/2}`. In between the upper bound interpolates the two
//! endpoints, `‖T‖_{1→2}^θ ‖T‖_{2→2}^{1−θ}` with `θ = 2/p0 − 1`, and the
//! lower bound is the best ratio `‖Tf‖₂/‖f‖_{p0}` over a test ensemble.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{KernelMatrix, SpectralDecomposition};
use crate::space::MetricMeasureSpace;
use crate::{Error, Result};

/// Point masses are used exhaustively up to this many source points.
pub const EXHAUSTIVE_POINT_MASSES: usize = 512;
pub const RANDOM_SIGN_VECTORS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorNormEstimate {
    pub lower: f64,
    pub upper: f64,
    pub p0: f64,
    pub lower_method: String,
    pub upper_method: String,
}

impl OperatorNormEstimate {
    fn exact(value: f64, p0: f64, method: &str) -> Self {
        Self {
            lower: value,
            upper: value,
            p0,
            lower_method: method.into(),
            upper_method: method.into(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

/// The restricted block `K[rows, cols]`.
#[derive(Clone, Debug)]
pub struct KernelBlock {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Mat<f64>,
}

impl KernelBlock {
    pub fn from_kernel(kernel: &KernelMatrix, rows: Vec<usize>, cols: Vec<usize>) -> Self {
        let values = Mat::from_fn(rows.len(), cols.len(), |a, b| kernel.get(rows[a], cols[b]));
        Self { rows, cols, values }
    }

    /// Columns `Σ_i g_i u_i(x) u_i(y)` for `y ∈ cols`, all rows.
    pub fn from_spectrum(decomp: &SpectralDecomposition, g: &[f64], cols: Vec<usize>) -> Self {
        let u = decomp.vectors();
        let n = decomp.len();
        let right = Mat::from_fn(n, cols.len(), |i, b| g[i] * u[(cols[b], i)]);
        let values = u * &right;
        Self {
            rows: (0..n).collect(),
            cols,
            values,
        }
    }

    /// Keeps only the listed rows (global indices, all present in `self`).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.rows.iter().copied().max().map_or(0, |m| m + 1)];
        for (a, &x) in self.rows.iter().enumerate() {
            pos[x] = a;
        }
        let values = Mat::from_fn(rows.len(), self.cols.len(), |a, b| self.values[(pos[rows[a]], b)]);
        Self {
            rows: rows.to_vec(),
            cols: self.cols.clone(),
            values,
        }
    }

    /// `‖T f‖_{L²(μ)}` over the rows for `f` given on the columns.
    pub fn apply_norm2(&self, space: &MetricMeasureSpace, f: &[f64]) -> f64 {
        let mu = space.measure();
        let mut s = 0.0;
        for (a, &x) in self.rows.iter().enumerate() {
            let v: f64 = (0..self.cols.len())
                .map(|b| self.values[(a, b)] * f[b] * mu[self.cols[b]])
                .sum();
            s += v * v * mu[x];
        }
        s.sqrt()
    }
}

fn lp_norm(space: &MetricMeasureSpace, support: &[usize], f: &[f64], p: f64) -> f64 {
    let mu = space.measure();
    if p.is_infinite() {
        return f.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    }
    support
        .iter()
        .zip(f)
        .map(|(&y, v)| v.abs().powf(p) * mu[y])
        .sum::<f64>()
        .powf(1.0 / p)
}

pub fn norm_1_to_2(space: &MetricMeasureSpace, block: &KernelBlock) -> f64 {
    let mu = space.measure();
    (0..block.cols.len())
        .map(|b| {
            block
                .rows
                .iter()
                .enumerate()
                .map(|(a, &x)| block.values[(a, b)].powi(2) * mu[x])
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Exact `‖·‖_{2→2}` and the maximizing function on the columns.
pub fn norm_2_to_2(space: &MetricMeasureSpace, block: &KernelBlock) -> Result<(f64, Vec<f64>)> {
    if block.rows.is_empty() || block.cols.is_empty() {
        return Ok((0.0, vec![0.0; block.cols.len()]));
    }
    let mu = space.measure();
    let m = Mat::from_fn(block.rows.len(), block.cols.len(), |a, b| {
        mu[block.rows[a]].sqrt() * block.values[(a, b)] * mu[block.cols[b]].sqrt()
    });
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Eigensolver(format!("svd: {e:?}")))?;
    let sigma = svd.S()[0];
    let v = svd.V();
    let f = (0..block.cols.len()).map(|b| v[(b, 0)] / mu[block.cols[b]].sqrt()).collect();
    Ok((sigma, f))
}

/// Test functions for the lower bound, all living on the block's columns.
#[derive(Clone, Debug, Default)]
pub struct TestEnsemble {
    /// Column subsets whose indicators are tried.
    pub indicators: Vec<Vec<usize>>,
    pub random_signs: usize,
    pub seed: u64,
}

impl TestEnsemble {
    pub fn standard(seed: u64) -> Self {
        Self {
            indicators: Vec::new(),
            random_signs: RANDOM_SIGN_VECTORS,
            seed,
        }
    }
}

fn check_p0(p0: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&p0) {
        return Err(Error::invalid(format!("p0 must lie in [1, 2], got {p0}")));
    }
    Ok(())
}

/// Bracket for `‖P_rows T P_cols‖_{p0→2}`.
pub fn block_norm_p_to_2(
    space: &MetricMeasureSpace,
    block: &KernelBlock,
    p0: f64,
    ensemble: &TestEnsemble,
) -> Result<OperatorNormEstimate> {
    check_p0(p0)?;
    if p0 == 1.0 {
        return Ok(OperatorNormEstimate::exact(norm_1_to_2(space, block), p0, "column norm"));
    }
    let (n2, top) = norm_2_to_2(space, block)?;
    if p0 == 2.0 {
        return Ok(OperatorNormEstimate::exact(n2, p0, "top singular value"));
    }
    let n1 = norm_1_to_2(space, block);
    let theta = 2.0 / p0 - 1.0;
    let upper = n1.powf(theta) * n2.powf(1.0 - theta);

    let c = block.cols.len();
    let mut best = 0.0f64;
    let mut ratio = |f: &[f64]| {
        let d = lp_norm(space, &block.cols, f, p0);
        if d > 0.0 {
            best = best.max(block.apply_norm2(space, f) / d);
        }
    };
    let stride = c.div_ceil(EXHAUSTIVE_POINT_MASSES).max(1);
    let mut e = vec![0.0; c];
    for b in (0..c).step_by(stride) {
        e[b] = 1.0;
        ratio(&e);
        e[b] = 0.0;
    }
    ratio(&top);
    for set in &ensemble.indicators {
        let f: Vec<f64> = block.cols.iter().map(|y| if set.contains(y) { 1.0 } else { 0.0 }).collect();
        ratio(&f);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ensemble.seed);
    for _ in 0..ensemble.random_signs {
        let f: Vec<f64> = (0..c).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        ratio(&f);
    }
    Ok(OperatorNormEstimate {
        lower: best.min(upper),
        upper,
        p0,
        lower_method: format!(
            "test ensemble: point masses (stride {stride}), top 2→2 vector, {} indicators, {} random signs (seed {})",
            ensemble.indicators.len(),
            ensemble.random_signs,
            ensemble.seed
        ),
        upper_method: "Riesz-Thorin between exact 1→2 and 2→2".into(),
    })
}

/// Bracket for the whole operator.
pub fn op_norm_p_to_2(kernel: &KernelMatrix, p0: f64) -> Result<OperatorNormEstimate> {
    check_p0(p0)?;
    let all: Vec<usize> = (0..kernel.len()).collect();
    let block = KernelBlock::from_kernel(kernel, all.clone(), all);
    block_norm_p_to_2(kernel.space(), &block, p0, &TestEnsemble::standard(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid_space, Topology};
    use std::sync::Arc;

    fn torus(n: usize) -> Arc<MetricMeasureSpace> {
        Arc::new(build_grid_space(1, n, 1.0, Topology::Torus).unwrap())
    }

    #[test]
    fn identity_kernel() {
        let k = KernelMatrix::identity(torus(16));
        for p0 in [1.0, 1.5, 2.0] {
            let e = op_norm_p_to_2(&k, p0).unwrap();
            assert!((e.upper - 1.0).abs() < 1e-12, "p0={p0}");
            assert!(e.lower <= e.upper * (1.0 + 1e-9));
        }
    }

    #[test]
    fn zero_kernel() {
        let s = torus(8);
        let k = KernelMatrix::new(s, Mat::zeros(8, 8), "zero").unwrap();
        for p0 in [1.0, 1.3, 2.0] {
            let e = op_norm_p_to_2(&k, p0).unwrap();
            assert_eq!((e.lower, e.upper), (0.0, 0.0));
        }
    }

    #[test]
    fn rank_one_column_formula() {
        let s = Arc::new(
            MetricMeasureSpace::from_line_points(vec![0.0, 1.0, 2.0], vec![0.5, 2.0, 1.0], "w").unwrap(),
        );
        let g = [1.0, -2.0, 0.5];
        let h = [0.3, -1.7, 0.9];
        let k = KernelMatrix::new(s.clone(), Mat::from_fn(3, 3, |x, y| g[x] * h[y]), "rank one").unwrap();
        let g_norm = g.iter().zip(s.measure()).map(|(v, m)| v * v * m).sum::<f64>().sqrt();
        let e = op_norm_p_to_2(&k, 1.0).unwrap();
        assert!((e.upper - g_norm * 1.7).abs() < 1e-12);
    }

    #[test]
    fn p0_outside_range() {
        let k = KernelMatrix::identity(torus(4));
        assert!(op_norm_p_to_2(&k, 3.0).is_err());
        assert!(op_norm_p_to_2(&k, 0.5).is_err());
    }
}
