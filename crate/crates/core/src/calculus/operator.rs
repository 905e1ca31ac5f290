//! Operators `(Lf)(x) = Σ_y A(x,y) f(y)` that are self-adjoint in `L²(μ)`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use faer::Mat;

use crate::space::{EdgeList, MetricMeasureSpace, Topology};
use crate::{Error, Result};

/// Largest operator the dense eigensolver accepts.
pub const DENSE_LIMIT: usize = 2048;

/// Compressed sparse rows.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::invalid(format!("entry ({i},{j}) outside a {n}×{n} matrix")));
        }
        if let Some(&(i, j, v)) = triplets.iter().find(|t| !t.2.is_finite()) {
            return Err(Error::invalid(format!("entry ({i},{j}) = {v} is not finite")));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = Self {
            n,
            row_ptr,
            cols,
            vals,
        };
        m.drop_zeros();
        Ok(m)
    }

    fn drop_zeros(&mut self) {
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.vals[k] != 0.0 {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[i + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        crate::par::fill(y, |i| self.row(i).map(|(j, v)| v * x[j]).sum());
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Storage {
    Dense(Mat<f64>),
    Sparse(CsrMatrix),
}

/// A non-negative operator, self-adjoint with respect to `⟨f,g⟩ = Σ f g μ`.
///
/// Symmetry in `L²(μ)` is checked on construction; non-negativity is checked
/// when the spectrum is computed.
#[derive(Clone, Debug)]
pub struct SelfAdjointOperator {
    space: Arc<MetricMeasureSpace>,
    storage: Storage,
    label: String,
}

fn mu_symmetry_defect<F: Fn(usize, usize) -> f64>(
    n: usize,
    mu: &[f64],
    entries: impl Iterator<Item = (usize, usize)>,
    a: F,
) -> Result<()> {
    let pairs: Vec<(usize, usize)> = entries.collect();
    let scale = pairs
        .iter()
        .map(|&(i, j)| (mu[i] * a(i, j)).abs())
        .fold(0.0, f64::max);
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    for (i, j) in pairs {
        debug_assert!(i < n && j < n);
        let defect = (mu[i] * a(i, j) - mu[j] * a(j, i)).abs();
        if defect > tol {
            return Err(Error::NotMuSymmetric {
                row: i,
                col: j,
                defect,
            });
        }
    }
    Ok(())
}

impl SelfAdjointOperator {
    pub fn from_dense(space: Arc<MetricMeasureSpace>, a: Mat<f64>, label: impl Into<String>) -> Result<Self> {
        let n = space.len();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.nrows().max(a.ncols()),
            });
        }
        if let Some((i, j)) = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| !a[(i, j)].is_finite())
        {
            return Err(Error::invalid(format!("entry ({i},{j}) is not finite")));
        }
        let pairs = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
        mu_symmetry_defect(n, space.measure(), pairs, |i, j| a[(i, j)])?;
        Ok(Self {
            space,
            storage: Storage::Dense(a),
            label: label.into(),
        })
    }

    pub fn from_sparse(space: Arc<MetricMeasureSpace>, a: CsrMatrix, label: impl Into<String>) -> Result<Self> {
        let n = space.len();
        if a.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.n() });
        }
        let pairs = (0..n).flat_map(|i| a.row(i).map(move |(j, _)| (i, j)));
        mu_symmetry_defect(n, space.measure(), pairs, |i, j| a.get(i, j))?;
        Ok(Self {
            space,
            storage: Storage::Sparse(a),
            label: label.into(),
        })
    }

    /// Reads `i j value` triplets for an operator on `space`.
    pub fn from_triplet_file(space: Arc<MetricMeasureSpace>, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let err = |line: usize, message: &str| Error::Parse {
            path: PathBuf::from(path),
            line,
            message: message.into(),
        };
        let mut triplets = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(k + 1, "expected `i j value`"));
            }
            let i = f[0].parse().map_err(|_| err(k + 1, "bad row index"))?;
            let j = f[1].parse().map_err(|_| err(k + 1, "bad column index"))?;
            let v = f[2].parse().map_err(|_| err(k + 1, "bad value"))?;
            triplets.push((i, j, v));
        }
        let a = CsrMatrix::from_triplets(space.len(), triplets)?;
        let label = format!("triplets({})", path.display());
        Self::from_sparse(space, a, label)
    }

    /// `(1/h²)·(2f(x) − f(x+h) − f(x−h))` summed over axes. On intervals the
    /// missing neighbours count as zero (Dirichlet ends).
    pub fn second_difference(space: Arc<MetricMeasureSpace>) -> Result<Self> {
        let g = space
            .grid()
            .ok_or_else(|| Error::invalid("second difference needs a grid space"))?
            .clone();
        let n = space.len();
        let w = 1.0 / (g.spacing * g.spacing);
        let mut t = Vec::with_capacity(n * (2 * g.dim + 1));
        for x in 0..n {
            let coord = [x % g.side, x / g.side];
            for axis in 0..g.dim {
                t.push((x, x, 2.0 * w));
                for step in [-1i64, 1] {
                    let c = coord[axis] as i64 + step;
                    let c = match g.topology {
                        Topology::Torus => c.rem_euclid(g.side as i64) as usize,
                        Topology::Interval if c < 0 || c >= g.side as i64 => continue,
                        Topology::Interval => c as usize,
                    };
                    let mut nb = coord;
                    nb[axis] = c;
                    t.push((x, nb[0] + g.side * nb[1], -w));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, t)?;
        let label = format!("second difference on {}", space.label());
        Self::from_sparse(space, a, label)
    }

    /// `(Lf)(x) = μ(x)⁻¹ Σ_y w(x,y)(f(x) − f(y))` with conductance
    /// `w = √(μ(x)μ(y)) / length²`, which reduces to the second difference on
    /// a uniform path.
    pub fn graph_laplacian(space: Arc<MetricMeasureSpace>, edges: &EdgeList) -> Result<Self> {
        let n = space.len();
        if edges.n != n {
            return Err(Error::DimensionMismatch { expected: n, got: edges.n });
        }
        let mu = space.measure();
        let mut t = Vec::with_capacity(4 * edges.edges.len());
        for &(i, j, len) in &edges.edges {
            let w = (mu[i] * mu[j]).sqrt() / (len * len);
            t.push((i, i, w / mu[i]));
            t.push((j, j, w / mu[j]));
            t.push((i, j, -w / mu[i]));
            t.push((j, i, -w / mu[j]));
        }
        let a = CsrMatrix::from_triplets(n, t)?;
        let label = format!("graph Laplacian on {}", space.label());
        Self::from_sparse(space, a, label)
    }

    /// `−d²/dx² + c/x²` on `[−(m+1)h, (m+1)h]` with Dirichlet ends and the
    /// cell at the origin removed: the points are `±h, …, ±mh` and the
    /// origin acts as a Dirichlet node. Refused below the Hardy constant
    /// `c = −1/4`, where the operator stops being non-negative.
    pub fn inverse_square(half_points: usize, spacing: f64, c: f64) -> Result<Self> {
        if !c.is_finite() || c < -0.25 {
            return Err(Error::invalid(format!(
                "inverse-square coupling c = {c} is below −1/4; the operator is not non-negative"
            )));
        }
        if half_points < 1 || !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid("inverse-square grid needs m ≥ 1 and h > 0"));
        }
        let m = half_points;
        let coords: Vec<f64> = (1..=m)
            .rev()
            .map(|k| -(k as f64) * spacing)
            .chain((1..=m).map(|k| k as f64 * spacing))
            .collect();
        let n = coords.len();
        let space = Arc::new(MetricMeasureSpace::from_line_points(
            coords.clone(),
            vec![spacing; n],
            format!("inverse-square line(m={m}, h={spacing}, c={c})"),
        )?);
        let w = 1.0 / (spacing * spacing);
        let mut t = Vec::with_capacity(3 * n);
        for (i, &x) in coords.iter().enumerate() {
            t.push((i, i, 2.0 * w + c / (x * x)));
            // Neighbours on the same side of the hole only.
            if i % m != 0 {
                t.push((i, i - 1, -w));
            }
            if (i + 1) % m != 0 {
                t.push((i, i + 1, -w));
            }
        }
        let a = CsrMatrix::from_triplets(n, t)?;
        Self::from_sparse(space, a, format!("inverse-square potential c={c}"))
    }

    pub fn space(&self) -> &Arc<MetricMeasureSpace> {
        &self.space
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(a) => a[(i, j)],
            Storage::Sparse(a) => a.get(i, j),
        }
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.len() });
        }
        let mut y = vec![0.0; n];
        match &self.storage {
            Storage::Sparse(a) => a.matvec(f, &mut y),
            Storage::Dense(a) => crate::par::fill(&mut y, |i| (0..n).map(|j| a[(i, j)] * f[j]).sum()),
        }
        Ok(y)
    }

    /// Dense copy of `A`, refused past [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<Mat<f64>> {
        let n = self.len();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { size: n, limit: DENSE_LIMIT });
        }
        Ok(match &self.storage {
            Storage::Dense(a) => a.clone(),
            Storage::Sparse(a) => {
                let mut m = Mat::<f64>::zeros(n, n);
                for i in 0..n {
                    for (j, v) in a.row(i) {
                        m[(i, j)] = v;
                    }
                }
                m
            }
        })
    }

    /// Gershgorin bound `max_x Σ_y |A(x,y)|` on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| match &self.storage {
                Storage::Dense(a) => (0..n).map(|j| a[(i, j)].abs()).sum::<f64>(),
                Storage::Sparse(a) => a.row(i).map(|(_, v)| v.abs()).sum(),
            })
            .fold(0.0, f64::max)
    }

    /// Rayleigh-quotient power iteration in `L²(μ)`; a lower estimate of the
    /// spectral radius.
    pub fn power_iteration(&self, iterations: usize) -> Result<f64> {
        let n = self.len();
        let mu = self.space.measure();
        // Deterministic start with components along every mode.
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + ((i as f64 * 0.618_033_988_749_895).fract() - 0.5))
            .collect();
        let norm = |v: &[f64]| v.iter().zip(mu).map(|(a, m)| a * a * m).sum::<f64>().sqrt();
        let mut estimate = 0.0;
        for _ in 0..iterations.max(1) {
            let nv = norm(&v);
            if nv == 0.0 || !nv.is_finite() {
                return Err(Error::Eigensolver("power iteration collapsed".into()));
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let w = self.apply(&v)?;
            estimate = v.iter().zip(&w).zip(mu).map(|((a, b), m)| a * b * m).sum::<f64>();
            v = w;
        }
        if !estimate.is_finite() {
            return Err(Error::Eigensolver("power iteration diverged".into()));
        }
        Ok(estimate.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::build_grid_space;

    fn torus(n: usize, h: f64) -> Arc<MetricMeasureSpace> {
        Arc::new(build_grid_space(1, n, h, Topology::Torus).unwrap())
    }

    #[test]
    fn torus_stencil_rows_sum_to_zero() {
        let op = SelfAdjointOperator::second_difference(torus(8, 0.5)).unwrap();
        for i in 0..8 {
            let s: f64 = (0..8).map(|j| op.entry(i, j)).sum();
            assert_eq!(s, 0.0);
        }
        assert_eq!(op.entry(0, 7), -4.0);
        assert_eq!(op.gershgorin_bound(), 16.0);
    }

    #[test]
    fn two_point_torus_doubles_the_neighbour() {
        let op = SelfAdjointOperator::second_difference(torus(2, 1.0)).unwrap();
        assert_eq!(op.entry(0, 1), -2.0);
        assert_eq!(op.entry(0, 0), 2.0);
    }

    #[test]
    fn dirichlet_interval_has_no_wrap() {
        let s = Arc::new(build_grid_space(1, 5, 1.0, Topology::Interval).unwrap());
        let op = SelfAdjointOperator::second_difference(s).unwrap();
        assert_eq!(op.entry(0, 4), 0.0);
        assert_eq!(op.entry(0, 0), 2.0);
    }

    #[test]
    fn asymmetric_operator_is_refused() {
        let s = Arc::new(MetricMeasureSpace::from_line_points(vec![0.0, 1.0], vec![1.0, 2.0], "two").unwrap());
        let a = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { -1.0 });
        assert!(matches!(
            SelfAdjointOperator::from_dense(s.clone(), a, "bad"),
            Err(Error::NotMuSymmetric { .. })
        ));
        // μ(0)A(0,1) = μ(1)A(1,0) makes it admissible.
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => 2.0,
            (0, 1) => -2.0,
            (1, 0) => -1.0,
            _ => 1.0,
        });
        assert!(SelfAdjointOperator::from_dense(s, a, "ok").is_ok());
    }

    #[test]
    fn inverse_square_threshold() {
        assert!(SelfAdjointOperator::inverse_square(16, 0.5, -0.26).is_err());
        let op = SelfAdjointOperator::inverse_square(16, 0.5, -0.25).unwrap();
        assert_eq!(op.len(), 32);
        // The hole decouples the two half-lines.
        assert_eq!(op.entry(15, 16), 0.0);
        assert_eq!(op.entry(16, 17), -4.0);
    }

    #[test]
    fn power_iteration_below_gershgorin() {
        let op = SelfAdjointOperator::second_difference(torus(64, 1.0)).unwrap();
        let est = op.power_iteration(400).unwrap();
        assert!(est <= op.gershgorin_bound() * (1.0 + 1e-12));
        assert!(est > 3.9, "{est}");
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 0.0)]).unwrap();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.nnz(), 1);
        assert!(CsrMatrix::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    }
}
