//! Finite metric measure spaces `(X, d, μ)`.
//!
//! Balls are closed, `B(x, r) = {y : d(x, y) ≤ r}`, so `V(x, r)` is
//! right-continuous in `r` and never empty. Grid scenarios use the exact
//! wrap-aware geodesic distance of the flat torus (or of the segment), never
//! the Euclidean chord.

mod doubling;
mod graph;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use doubling::{default_fit, fit_doubling_dimension, DoublingFit, DIMENSION_RESOLUTION};
pub use graph::{read_edge_list, read_measure_file, EdgeList};

/// Relative slack used when comparing a distance against a radius.
pub(crate) const RADIUS_TOL: f64 = 1e-12;

/// `d ≤ r` under the closed-ball convention.
#[inline]
pub(crate) fn within(d: f64, r: f64) -> bool {
    d <= r * (1.0 + RADIUS_TOL)
}

/// `d < t`, ties excluded.
#[inline]
pub(crate) fn strictly_within(d: f64, t: f64) -> bool {
    d < t * (1.0 - RADIUS_TOL)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Torus,
    Interval,
}

/// Regular grid in one or two dimensions. Points are numbered `i + side * j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridGeometry {
    pub dim: usize,
    pub side: usize,
    pub spacing: f64,
    pub topology: Topology,
}

impl GridGeometry {
    fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.side, idx / self.side)
    }

    fn steps(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        match self.topology {
            Topology::Torus => d.min(self.side - d),
            Topology::Interval => d,
        }
    }

    fn distance(&self, x: usize, y: usize) -> f64 {
        let (xi, xj) = self.coords(x);
        let (yi, yj) = self.coords(y);
        let di = self.steps(xi, yi);
        if self.dim == 1 {
            return di as f64 * self.spacing;
        }
        let dj = self.steps(xj, yj);
        match (di, dj) {
            (0, k) | (k, 0) => k as f64 * self.spacing,
            _ => (di as f64).hypot(dj as f64) * self.spacing,
        }
    }

    fn diameter(&self) -> f64 {
        let steps = match self.topology {
            Topology::Torus => self.side / 2,
            Topology::Interval => self.side - 1,
        } as f64;
        if self.dim == 1 {
            steps * self.spacing
        } else {
            steps.hypot(steps) * self.spacing
        }
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }
}

#[derive(Clone, Debug)]
enum Metric {
    Grid(GridGeometry),
    /// Points on a line with the Euclidean distance.
    Line(Vec<f64>),
    /// Row-major `n × n` distance table.
    Dense { n: usize, table: Vec<f64> },
}

/// A finite metric measure space. Immutable once built.
#[derive(Clone, Debug)]
pub struct MetricMeasureSpace {
    metric: Metric,
    measure: Vec<f64>,
    label: String,
}

/// Closed ball `{y : d(center, y) ≤ radius}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    center: usize,
    radius: f64,
}

impl Ball {
    pub fn new(center: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The concentric ball `λB`.
    pub fn dilate(&self, factor: f64) -> Result<Self> {
        Ball::new(self.center, self.radius * factor)
    }
}

/// Builds a 1D or 2D grid with geodesic distance and `μ(x) = spacing^dim`.
pub fn build_grid_space(
    dim: usize,
    side: usize,
    spacing: f64,
    topology: Topology,
) -> Result<MetricMeasureSpace> {
    if dim != 1 && dim != 2 {
        return Err(Error::invalid(format!("grid dimension must be 1 or 2, got {dim}")));
    }
    if side < 2 {
        return Err(Error::invalid(format!("grid side must be at least 2, got {side}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::invalid(format!("grid spacing must be positive, got {spacing}")));
    }
    // Distances are integer multiples of the spacing; they must stay exact.
    let extent = side as f64 * spacing;
    if side as u64 > (1u64 << 52) || !extent.is_finite() || !(extent * extent).is_finite() {
        return Err(Error::invalid(format!(
            "side {side} with spacing {spacing} exceeds distance precision"
        )));
    }
    let geometry = GridGeometry {
        dim,
        side,
        spacing,
        topology,
    };
    let n = geometry.len();
    let label = format!(
        "{}{}d(side={side}, h={spacing})",
        match topology {
            Topology::Torus => "torus",
            Topology::Interval => "interval",
        },
        dim
    );
    Ok(MetricMeasureSpace {
        metric: Metric::Grid(geometry),
        measure: vec![spacing.powi(dim as i32); n],
        label,
    })
}

impl MetricMeasureSpace {
    /// Points on the real line with the Euclidean distance.
    pub fn from_line_points(
        coords: Vec<f64>,
        measure: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        check_measure(&measure, coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("line coordinates must be finite"));
        }
        Ok(Self {
            metric: Metric::Line(coords),
            measure,
            label: label.into(),
        })
    }

    /// General finite metric space from a row-major distance table.
    ///
    /// Checks symmetry, the zero diagonal and the triangle inequality
    /// (exhaustively up to 160 points, on a fixed pseudo-random sample of
    /// triples beyond that).
    pub fn from_distance_table(
        n: usize,
        table: Vec<f64>,
        measure: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if table.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: table.len(),
            });
        }
        check_measure(&measure, n)?;
        for x in 0..n {
            if table[x * n + x] != 0.0 {
                return Err(Error::invalid(format!("d({x},{x}) must be 0")));
            }
            for y in 0..n {
                let d = table[x * n + y];
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(Error::invalid(format!("d({x},{y}) = {d} is not a finite length")));
                }
                if d != table[y * n + x] {
                    return Err(Error::invalid(format!("distance not symmetric at ({x},{y})")));
                }
            }
        }
        let check = |x: usize, y: usize, z: usize| -> Result<()> {
            let (dxy, dyz, dxz) = (table[x * n + y], table[y * n + z], table[x * n + z]);
            if dxz > (dxy + dyz) * (1.0 + 1e-12) {
                return Err(Error::invalid(format!("triangle inequality fails at ({x},{y},{z})")));
            }
            Ok(())
        };
        if n <= 160 {
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        check(x, y, z)?;
                    }
                }
            }
        } else {
            // Fixed LCG so validation is reproducible.
            let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
            let mut next = || {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 33) as usize) % n
            };
            for _ in 0..200_000 {
                let (x, y, z) = (next(), next(), next());
                check(x, y, z)?;
            }
        }
        Ok(Self {
            metric: Metric::Dense { n, table },
            measure,
            label: label.into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn grid(&self) -> Option<&GridGeometry> {
        match &self.metric {
            Metric::Grid(g) => Some(g),
            _ => None,
        }
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn mu(&self, x: usize) -> f64 {
        self.measure[x]
    }

    pub fn total_mass(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn distance(&self, x: usize, y: usize) -> f64 {
        match &self.metric {
            Metric::Grid(g) => g.distance(x, y),
            Metric::Line(c) => (c[x] - c[y]).abs(),
            Metric::Dense { n, table } => table[x * n + y],
        }
    }

    pub fn distances_from(&self, x: usize) -> Vec<f64> {
        (0..self.len()).map(|y| self.distance(x, y)).collect()
    }

    pub fn diameter(&self) -> f64 {
        match &self.metric {
            Metric::Grid(g) => g.diameter(),
            Metric::Line(c) => {
                let (lo, hi) = c
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                if c.is_empty() {
                    0.0
                } else {
                    hi - lo
                }
            }
            Metric::Dense { table, .. } => table.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Smallest positive distance between two points.
    pub fn min_spacing(&self) -> f64 {
        match &self.metric {
            Metric::Grid(g) => g.spacing,
            Metric::Line(c) => {
                let mut sorted = c.clone();
                sorted.sort_by(f64::total_cmp);
                sorted
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .filter(|&d| d > 0.0)
                    .fold(f64::INFINITY, f64::min)
            }
            Metric::Dense { table, .. } => table
                .iter()
                .copied()
                .filter(|&d| d > 0.0)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `dist(U₁, U₂) = min d(x, y)` over `x ∈ U₁`, `y ∈ U₂`.
    pub fn set_distance(&self, first: &[usize], second: &[usize]) -> f64 {
        let mut best = f64::INFINITY;
        for &x in first {
            for &y in second {
                best = best.min(self.distance(x, y));
            }
        }
        best
    }

    pub fn ball_members(&self, ball: &Ball) -> Vec<usize> {
        (0..self.len())
            .filter(|&y| within(self.distance(ball.center, y), ball.radius))
            .collect()
    }

    /// `V(x, r) = Σ_{d(x,y) ≤ r} μ(y)`.
    pub fn ball_volume(&self, ball: &Ball) -> f64 {
        (0..self.len())
            .filter(|&y| within(self.distance(ball.center, y), ball.radius))
            .map(|y| self.measure[y])
            .sum()
    }

    /// `V(x, r)` for a bare center and radius (`r ≥ 0`).
    pub fn volume(&self, center: usize, radius: f64) -> f64 {
        (0..self.len())
            .filter(|&y| within(self.distance(center, y), radius))
            .map(|y| self.measure[y])
            .sum()
    }

    /// The dyadic annulus `2^j B ∖ 2^{j-1} B`, i.e. `2^{j-1} r < d ≤ 2^j r`.
    ///
    /// # Panics
    /// If `j == 0`.
    pub fn annulus_members(&self, ball: &Ball, j: u32) -> Vec<usize> {
        assert!(j >= 1, "annulus index starts at 1");
        let outer = ball.radius * 2f64.powi(j as i32);
        let inner = outer / 2.0;
        (0..self.len())
            .filter(|&y| {
                let d = self.distance(ball.center, y);
                within(d, outer) && !within(d, inner)
            })
            .collect()
    }

    /// Strict exterior of the closed ball: `{y : d(center, y) > radius}`.
    pub fn exterior_members(&self, ball: &Ball) -> Vec<usize> {
        (0..self.len())
            .filter(|&y| !within(self.distance(ball.center, y), ball.radius))
            .collect()
    }
}

fn check_measure(measure: &[f64], n: usize) -> Result<()> {
    if measure.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: measure.len(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("space must have at least one point"));
    }
    if let Some((i, m)) = measure
        .iter()
        .enumerate()
        .find(|(_, m)| !(**m > 0.0 && m.is_finite()))
    {
        return Err(Error::invalid(format!("μ({i}) = {m} is not a positive mass")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn torus1d(n: usize, h: f64) -> MetricMeasureSpace {
        build_grid_space(1, n, h, Topology::Torus).unwrap()
    }

    #[test]
    fn torus_diameter_is_half_the_circumference() {
        let s = torus1d(8, 1.0);
        assert_eq!(s.len(), 8);
        let max = (0..8).map(|y| s.distance(0, y)).fold(0.0, f64::max);
        assert_eq!(max, 4.0);
        assert_eq!(s.diameter(), 4.0);
    }

    #[test]
    fn interval_distances_from_endpoint() {
        let s = build_grid_space(1, 4, 0.5, Topology::Interval).unwrap();
        assert_eq!(s.distances_from(0), vec![0.0, 0.5, 1.0, 1.5]);
    }

    #[test]
    fn torus2d_has_unit_cells() {
        let s = build_grid_space(2, 16, 1.0, Topology::Torus).unwrap();
        assert_eq!(s.len(), 256);
        assert!(s.measure().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn grid_construction_errors() {
        assert!(build_grid_space(3, 8, 1.0, Topology::Torus).is_err());
        assert!(build_grid_space(1, 1, 1.0, Topology::Torus).is_err());
        assert!(build_grid_space(1, 8, 0.0, Topology::Torus).is_err());
        assert!(build_grid_space(1, 8, 1e300, Topology::Torus).is_err());
    }

    #[test]
    fn ball_volumes_by_enumeration() {
        let s = torus1d(8, 1.0);
        for x in 0..8 {
            // {x-2, ..., x+2}
            assert_eq!(s.ball_volume(&Ball::new(x, 2.0).unwrap()), 5.0);
            assert_eq!(s.ball_volume(&Ball::new(x, 0.999).unwrap()), 1.0);
        }
        let s2 = build_grid_space(2, 16, 1.0, Topology::Torus).unwrap();
        assert_eq!(s2.ball_volume(&Ball::new(37, 1.0).unwrap()), 5.0);
    }

    #[test]
    fn annuli() {
        let s = torus1d(64, 1.0);
        let b = Ball::new(0, 1.0).unwrap();
        let mut a2: Vec<f64> = s.annulus_members(&b, 2).iter().map(|&y| s.distance(0, y)).collect();
        a2.sort_by(f64::total_cmp);
        assert_eq!(a2, vec![3.0, 3.0, 4.0, 4.0]);
        assert!(s.annulus_members(&b, 7).is_empty());

        let s8 = torus1d(8, 1.0);
        let a1 = s8.annulus_members(&b, 1);
        assert_eq!(a1.len(), 2);
        assert!(a1.iter().all(|&y| s8.distance(0, y) == 2.0));
    }

    #[test]
    fn annuli_partition_the_space() {
        let s = build_grid_space(2, 12, 0.5, Topology::Torus).unwrap();
        let b = Ball::new(5, 0.75).unwrap();
        let mut mass = s.ball_volume(&b.dilate(2.0).unwrap());
        let mut j = 2;
        while b.radius() * 2f64.powi(j - 1) < s.diameter() {
            mass += s
                .annulus_members(&b, j as u32)
                .iter()
                .map(|&y| s.mu(y))
                .sum::<f64>();
            j += 1;
        }
        assert!((mass - s.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn dense_table_validation() {
        let ok = vec![0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0];
        assert!(MetricMeasureSpace::from_distance_table(3, ok, vec![1.0; 3], "path").is_ok());
        let bad = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
        assert!(MetricMeasureSpace::from_distance_table(3, bad, vec![1.0; 3], "bad").is_err());
        let neg_mu = vec![0.0, 1.0, 1.0, 0.0];
        assert!(MetricMeasureSpace::from_distance_table(2, neg_mu, vec![1.0, -1.0], "m").is_err());
    }

    proptest! {
        #[test]
        fn volume_is_monotone(side in 3usize..40, x in 0usize..40, r1 in 0.01f64..30.0, dr in 0.0f64..10.0) {
            let s = torus1d(side, 0.7);
            let x = x % side;
            let v1 = s.volume(x, r1);
            let v2 = s.volume(x, r1 + dr);
            prop_assert!(v1 <= v2);
            prop_assert!(v1 >= s.mu(x));
        }

        #[test]
        fn grid_metric_is_a_metric(side in 3usize..9, a in 0usize..81, b in 0usize..81, c in 0usize..81) {
            let s = build_grid_space(2, side, 1.3, Topology::Torus).unwrap();
            let n = s.len();
            let (a, b, c) = (a % n, b % n, c % n);
            prop_assert_eq!(s.distance(a, a), 0.0);
            prop_assert_eq!(s.distance(a, b), s.distance(b, a));
            prop_assert!(s.distance(a, c) <= s.distance(a, b) + s.distance(b, c) + 1e-12);
        }
    }
}
