//! Integral kernels with respect to `μ`: `(Tf)(x) = Σ_y K(x,y) f(y) μ(y)`.

use std::sync::Arc;

use faer::Mat;

use super::spectral::SpectralDecomposition;
use crate::multiplier::Multiplier;
use crate::space::MetricMeasureSpace;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct KernelMatrix {
    space: Arc<MetricMeasureSpace>,
    values: Mat<f64>,
    label: String,
}

impl KernelMatrix {
    pub fn new(space: Arc<MetricMeasureSpace>, values: Mat<f64>, label: impl Into<String>) -> Result<Self> {
        let n = space.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: values.nrows().max(values.ncols()),
            });
        }
        Ok(Self {
            space,
            values,
            label: label.into(),
        })
    }

    /// The identity operator: `K(x,y) = δ_xy / μ(y)`.
    pub fn identity(space: Arc<MetricMeasureSpace>) -> Self {
        let n = space.len();
        let mu = space.measure().to_vec();
        let values = Mat::from_fn(n, n, |i, j| if i == j { 1.0 / mu[i] } else { 0.0 });
        Self {
            space,
            values,
            label: "identity".into(),
        }
    }

    pub fn space(&self) -> &Arc<MetricMeasureSpace> {
        &self.space
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &Mat<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[(x, y)]
    }

    pub fn column(&self, y: usize) -> Vec<f64> {
        (0..self.len()).map(|x| self.values[(x, y)]).collect()
    }

    /// `max |K(x,y) − K(y,x)| / max |K|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                defect = defect.max((self.values[(x, y)] - self.values[(y, x)]).abs());
                scale = scale.max(self.values[(x, y)].abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.len() });
        }
        let mu = self.space.measure();
        let w: Vec<f64> = f.iter().zip(mu).map(|(a, m)| a * m).collect();
        let mut out = vec![0.0; n];
        crate::par::fill(&mut out, |x| (0..n).map(|y| self.values[(x, y)] * w[y]).sum());
        Ok(out)
    }

    /// Kernel of `self ∘ other`: `Σ_y K₁(x,y) μ(y) K₂(y,z)`.
    pub fn compose(&self, other: &KernelMatrix) -> Result<KernelMatrix> {
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let mu = self.space.measure();
        let scaled = Mat::from_fn(self.len(), self.len(), |y, z| mu[y] * other.values[(y, z)]);
        Ok(KernelMatrix {
            space: self.space.clone(),
            values: &self.values * &scaled,
            label: format!("{} ∘ {}", self.label, other.label),
        })
    }

    /// `max |K₁ − K₂| / max(|K₁|, |K₂|)`.
    pub fn relative_distance(&self, other: &KernelMatrix) -> f64 {
        let n = self.len();
        let mut diff = 0.0f64;
        let mut scale = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                let (a, b) = (self.values[(x, y)], other.values[(x, y)]);
                diff = diff.max((a - b).abs());
                scale = scale.max(a.abs()).max(b.abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }

    /// Fraction of the `L²(μ)` mass of column `y` at distance `> radius`
    /// from `y`. Zero columns report 0.
    pub fn column_tail_fraction(&self, y: usize, radius: f64) -> f64 {
        let mu = self.space.measure();
        let mut total = 0.0;
        let mut outside = 0.0;
        for (x, &w) in mu.iter().enumerate() {
            let m = self.values[(x, y)].powi(2) * w;
            total += m;
            if !crate::space::within(self.space.distance(x, y), radius) {
                outside += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    /// Smallest distance `ρ` from `y` with column tail fraction `≤ mass_tol`.
    pub fn column_support_radius(&self, y: usize, mass_tol: f64) -> f64 {
        let mu = self.space.measure();
        let mut cells: Vec<(f64, f64)> = (0..self.len())
            .map(|x| (self.space.distance(x, y), self.values[(x, y)].powi(2) * mu[x]))
            .collect();
        let total: f64 = cells.iter().map(|c| c.1).sum();
        if total == 0.0 {
            return 0.0;
        }
        cells.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Tail sums from the far end, then the first shell whose exterior
        // tail is small enough.
        let mut tail = 0.0;
        let mut tails = vec![0.0; cells.len()];
        for k in (0..cells.len()).rev() {
            tails[k] = tail;
            tail += cells[k].1;
        }
        let mut k = 0;
        while k < cells.len() {
            let d = cells[k].0;
            let mut last = k;
            while last + 1 < cells.len() && cells[last + 1].0 <= d * (1.0 + crate::space::RADIUS_TOL) {
                last += 1;
            }
            if tails[last] <= mass_tol * total {
                return d;
            }
            k = last + 1;
        }
        cells.last().map_or(0.0, |c| c.0)
    }
}

/// `K(x,y) = Σ_i g_i u_i(x) u_i(y)`.
pub fn kernel_from_values(decomp: &SpectralDecomposition, g: &[f64], label: impl Into<String>) -> Result<KernelMatrix> {
    let n = decomp.len();
    if g.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.len() });
    }
    let u = decomp.vectors();
    let scaled = Mat::from_fn(n, n, |x, i| u[(x, i)] * g[i]);
    let values = &scaled * u.transpose();
    KernelMatrix::new(decomp.space().clone(), values, label)
}

/// Kernel of `F(√L)`.
pub fn multiplier_kernel(decomp: &SpectralDecomposition, f: &Multiplier) -> Result<KernelMatrix> {
    let g = decomp.multiplier_values(f)?;
    kernel_from_values(decomp, &g, format!("{}(√L)", f.label()))
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be finite and non-negative, got {t}")));
    }
    Ok(())
}

/// Kernel of `e^{−tL}`.
pub fn heat_operator(decomp: &SpectralDecomposition, t: f64) -> Result<KernelMatrix> {
    check_time(t)?;
    let g: Vec<f64> = decomp.eigenvalues().iter().map(|l| (-t * l).exp()).collect();
    kernel_from_values(decomp, &g, format!("exp(-{t} L)"))
}

/// Kernel of `cos(t√L)`.
pub fn wave_cosine(decomp: &SpectralDecomposition, t: f64) -> Result<KernelMatrix> {
    check_time(t)?;
    let g: Vec<f64> = decomp.eigenvalues().iter().map(|l| (t * l.sqrt()).cos()).collect();
    kernel_from_values(decomp, &g, format!("cos({t} √L)"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{spectral_decompose, SelfAdjointOperator};
    use crate::space::{build_grid_space, Topology};
    use approx::assert_abs_diff_eq;

    fn pair() -> SpectralDecomposition {
        let s = Arc::new(MetricMeasureSpace::from_line_points(vec![0.0, 1.0], vec![1.0, 1.0], "pair").unwrap());
        let a = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { -1.0 });
        spectral_decompose(&SelfAdjointOperator::from_dense(s, a, "pair").unwrap()).unwrap()
    }

    #[test]
    fn two_point_heat_kernel() {
        let d = pair();
        let t = 0.7;
        let k = heat_operator(&d, t).unwrap();
        let e = (-2.0 * t).exp();
        assert_abs_diff_eq!(k.get(0, 0), 0.5 * (1.0 + e), epsilon = 1e-14);
        assert_abs_diff_eq!(k.get(0, 1), 0.5 * (1.0 - e), epsilon = 1e-14);
        assert_abs_diff_eq!(k.get(1, 1), 0.5 * (1.0 + e), epsilon = 1e-14);
    }

    #[test]
    fn zero_time_propagators_are_identity() {
        let s = Arc::new(build_grid_space(1, 16, 1.0, Topology::Torus).unwrap());
        let d = spectral_decompose(&SelfAdjointOperator::second_difference(s.clone()).unwrap()).unwrap();
        let id = KernelMatrix::identity(s);
        assert!(heat_operator(&d, 0.0).unwrap().relative_distance(&id) < 1e-12);
        assert!(wave_cosine(&d, 0.0).unwrap().relative_distance(&id) < 1e-12);
        assert!(heat_operator(&d, -1.0).is_err());
        assert!(wave_cosine(&d, f64::NAN).is_err());
    }

    #[test]
    fn support_radius_of_identity_is_zero() {
        let s = Arc::new(build_grid_space(1, 8, 1.0, Topology::Torus).unwrap());
        let id = KernelMatrix::identity(s);
        assert_eq!(id.column_support_radius(3, 1e-3), 0.0);
        assert_eq!(id.column_tail_fraction(3, 0.5), 0.0);
    }
}
