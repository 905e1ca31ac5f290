//! Dense spectral decomposition in `L²(μ)` and the functional calculus.

use std::sync::Arc;

use faer::{Mat, Side};

use super::operator::SelfAdjointOperator;
use crate::multiplier::Multiplier;
use crate::space::MetricMeasureSpace;
use crate::{Error, Result};

/// Relative eigenvalue clamp: `|λ| ≤ EIG_TOL · spectral radius` counts as 0.
pub const EIG_TOL: f64 = 1e-10;

/// `L = Σ_i λ_i u_i ⟨u_i, ·⟩_μ` with `⟨u_i, u_j⟩_μ = δ_ij`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    space: Arc<MetricMeasureSpace>,
    eigenvalues: Vec<f64>,
    /// Column `i` holds `u_i`.
    vectors: Mat<f64>,
    spectral_radius: f64,
}

/// Diagonalizes `D^{1/2} A D^{-1/2}` (symmetric when `A` is μ-symmetric) and
/// maps the eigenvectors back with `D^{-1/2}`.
pub fn spectral_decompose(op: &SelfAdjointOperator) -> Result<SpectralDecomposition> {
    let a = op.to_dense()?;
    let n = op.len();
    let mu = op.space().measure();
    let sq: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
    let s = Mat::from_fn(n, n, |i, j| {
        0.5 * (sq[i] * a[(i, j)] / sq[j] + sq[j] * a[(j, i)] / sq[i])
    });
    let eig = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let raw: Vec<f64> = (0..n).map(|i| eig.S()[i]).collect();
    let radius = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = EIG_TOL * radius;
    let mut eigenvalues = Vec::with_capacity(n);
    for &v in &raw {
        if v < -tol {
            return Err(Error::NegativeSpectrum { value: v, tolerance: tol });
        }
        eigenvalues.push(if v.abs() <= tol { 0.0 } else { v });
    }
    let u = eig.U();
    let vectors = Mat::from_fn(n, n, |x, i| u[(x, i)] / sq[x]);
    Ok(SpectralDecomposition {
        space: op.space().clone(),
        eigenvalues,
        vectors,
        spectral_radius: radius,
    })
}

impl SpectralDecomposition {
    pub fn space(&self) -> &Arc<MetricMeasureSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Ascending, clamped at 0.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &Mat<f64> {
        &self.vectors
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|x| self.vectors[(x, i)]).collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn tolerance(&self) -> f64 {
        EIG_TOL * self.spectral_radius
    }

    /// Smallest positive eigenvalue, if any.
    pub fn spectral_gap(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().find(|&l| l > 0.0)
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `c_i = ⟨f, u_i⟩_μ`.
    pub fn coefficients(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let mu = self.space.measure();
        let n = self.len();
        let weighted: Vec<f64> = f.iter().zip(mu).map(|(a, m)| a * m).collect();
        Ok(crate::par::map_range(n, |i| {
            (0..n).map(|x| self.vectors[(x, i)] * weighted[x]).sum()
        }))
    }

    /// `Σ_i c_i u_i`.
    pub fn synthesize(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_len(c)?;
        let n = self.len();
        let mut out = vec![0.0; n];
        crate::par::fill(&mut out, |x| (0..n).map(|i| self.vectors[(x, i)] * c[i]).sum());
        Ok(out)
    }

    /// Coefficient matrix `Uᵀ D F` for the columns of `f` (`n × k`).
    pub fn coefficients_block(&self, f: &Mat<f64>) -> Result<Mat<f64>> {
        if f.nrows() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: f.nrows(),
            });
        }
        let mu = self.space.measure();
        let weighted = Mat::from_fn(f.nrows(), f.ncols(), |x, k| f[(x, k)] * mu[x]);
        Ok(self.vectors.transpose() * &weighted)
    }

    /// Values `F(√λ_i)`; fails on the first non-finite one.
    pub fn multiplier_values(&self, f: &Multiplier) -> Result<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let v = f.eval(l.sqrt());
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::MultiplierUndefined {
                        label: f.label().to_string(),
                        eigenvalue: l,
                        sqrt_eigenvalue: l.sqrt(),
                    })
                }
            })
            .collect()
    }

    /// `F(√L) f = Σ_i F(√λ_i) ⟨f, u_i⟩_μ u_i`.
    pub fn apply_values(&self, g: &[f64], f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(g)?;
        let mut c = self.coefficients(f)?;
        c.iter_mut().zip(g).for_each(|(c, g)| *c *= g);
        self.synthesize(&c)
    }

    /// Drops the components along `N(L)`.
    pub fn project_range(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut c = self.coefficients(f)?;
        let mut any = false;
        for (c, &l) in c.iter_mut().zip(&self.eigenvalues) {
            if l == 0.0 {
                *c = 0.0;
                any = true;
            }
        }
        if !any {
            return Ok(f.to_vec());
        }
        self.synthesize(&c)
    }

    /// `L f` reconstructed from the spectrum.
    pub fn reconstruct_apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.apply_values(&self.eigenvalues.clone(), f)
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(self.space.measure())
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }
}

/// `F(√L) f`.
pub fn apply_multiplier(decomp: &SpectralDecomposition, f_mult: &Multiplier, f: &[f64]) -> Result<Vec<f64>> {
    let g = decomp.multiplier_values(f_mult)?;
    decomp.apply_values(&g, f)
}

/// `‖F(√L)‖_{2→2}` on the computed spectrum, i.e. `max_i |F(√λ_i)|`.
pub fn spectral_sup(decomp: &SpectralDecomposition, f_mult: &Multiplier) -> Result<f64> {
    Ok(decomp
        .multiplier_values(f_mult)?
        .iter()
        .fold(0.0, |m: f64, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid_space, Topology};
    use approx::assert_abs_diff_eq;

    pub(crate) fn two_point() -> SelfAdjointOperator {
        let s = Arc::new(MetricMeasureSpace::from_line_points(vec![0.0, 1.0], vec![1.0, 1.0], "pair").unwrap());
        let a = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { -1.0 });
        SelfAdjointOperator::from_dense(s, a, "pair").unwrap()
    }

    #[test]
    fn two_point_spectrum() {
        let d = spectral_decompose(&two_point()).unwrap();
        // det(A − λI) = (1−λ)² − 1 = λ(λ − 2)
        assert_abs_diff_eq!(d.eigenvalues()[0], 0.0);
        assert_abs_diff_eq!(d.eigenvalues()[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_operator() {
        let s = Arc::new(build_grid_space(1, 5, 1.0, Topology::Interval).unwrap());
        let op = SelfAdjointOperator::from_dense(s, Mat::zeros(5, 5), "zero").unwrap();
        let d = spectral_decompose(&op).unwrap();
        assert!(d.eigenvalues().iter().all(|&l| l == 0.0));
        for i in 0..5 {
            for j in 0..5 {
                let ip = d.inner(&d.eigenvector(i), &d.eigenvector(j));
                assert_abs_diff_eq!(ip, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn torus_spectrum_matches_fourier() {
        let s = Arc::new(build_grid_space(1, 8, 1.0, Topology::Torus).unwrap());
        let d = spectral_decompose(&SelfAdjointOperator::second_difference(s).unwrap()).unwrap();
        let mut expect: Vec<f64> = (0..8)
            .map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / 8.0).cos())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in d.eigenvalues().iter().zip(&expect) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn weighted_measure_orthonormality_and_reconstruction() {
        let mu = vec![0.5, 1.0, 2.0, 1.5];
        let s = Arc::new(MetricMeasureSpace::from_line_points(vec![0.0, 1.0, 2.0, 3.0], mu.clone(), "w").unwrap());
        // Path Laplacian with symmetric conductances.
        let w = [1.0, 0.7, 2.0];
        let a = Mat::from_fn(4, 4, |i, j| {
            let c = |a: usize, b: usize| if a.abs_diff(b) == 1 { w[a.min(b)] } else { 0.0 };
            if i == j {
                (0..4).map(|k| c(i, k)).sum::<f64>() / mu[i]
            } else {
                -c(i, j) / mu[i]
            }
        });
        let op = SelfAdjointOperator::from_dense(s, a.clone(), "path").unwrap();
        let d = spectral_decompose(&op).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let ip = d.inner(&d.eigenvector(i), &d.eigenvector(j));
                assert_abs_diff_eq!(ip, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
        let f = vec![1.0, -2.0, 0.5, 3.0];
        let lf = op.apply(&f).unwrap();
        let rf = d.reconstruct_apply(&f).unwrap();
        for (a, b) in lf.iter().zip(&rf) {
            assert!((a - b).abs() <= 1e-8 * lf.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }

    #[test]
    fn genuine_negative_spectrum_is_an_error() {
        let s = Arc::new(build_grid_space(1, 3, 1.0, Topology::Interval).unwrap());
        let a = Mat::from_fn(3, 3, |i, j| if i == j { -1.0 } else { 0.0 });
        let op = SelfAdjointOperator::from_dense(s, a, "neg").unwrap();
        assert!(matches!(spectral_decompose(&op), Err(Error::NegativeSpectrum { .. })));
    }

    #[test]
    fn long_time_heat_projects_onto_constants() {
        let d = spectral_decompose(&two_point()).unwrap();
        let heat = Multiplier::new("heat", |l| (-50.0 * l * l).exp());
        let out = apply_multiplier(&d, &heat, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn range_projection_on_two_points() {
        let d = spectral_decompose(&two_point()).unwrap();
        let p = d.project_range(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], -0.5, epsilon = 1e-14);
        let pp = d.project_range(&p).unwrap();
        assert_abs_diff_eq!(pp[0], p[0], epsilon = 1e-12);
    }

    #[test]
    fn undefined_multiplier_names_the_eigenvalue() {
        let d = spectral_decompose(&two_point()).unwrap();
        let bad = Multiplier::new("pole", |l| 1.0 / l);
        match apply_multiplier(&d, &bad, &[1.0, 0.0]) {
            Err(Error::MultiplierUndefined { eigenvalue, .. }) => assert_eq!(eigenvalue, 0.0),
            other => panic!("{other:?}"),
        }
    }
}
