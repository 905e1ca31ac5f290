//! Square functions
//! `S_{h,K} f(x)² = ∫₀^∞ Σ_{d(x,y)<t} |(t²L)^K e^{−t²L} f(y)|² μ(y)/V(x,t) dt/t`.
//!
//! The `t`-integral runs over `[t_min, t_max]` with the midpoint rule in
//! `log t`. The fine grid has `2m` intervals and the coarse grid `m`; both
//! are evaluated from one set of heat-factor columns, and the relative change
//! of `‖S f‖₂` between them must stay under [`QUADRATURE_TOL`].
//!
//! With `t_min` at or below the smallest distance, the strict ball is `{x}`
//! on `(0, t_min)`; with `t_max` beyond the diameter it is the whole space.
//! In both ranges the spatial average leaves `Σ_y |g_t(y)|² μ(y)` unchanged,
//! so the tails of `‖S f‖₂²` are exact incomplete gamma integrals per
//! eigencomponent.

use faer::Mat;
use serde::Serialize;

use crate::calculus::SpectralDecomposition;
use crate::space::{strictly_within, within, MetricMeasureSpace};
use crate::{Error, Result};

pub const DEFAULT_POINTS_PER_DECADE: usize = 16;
/// Largest accepted relative change of `‖S f‖₂` between coarse and fine grids.
pub const QUADRATURE_TOL: f64 = 0.01;

/// Log-spaced `t` grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
    /// Intervals of the fine grid (even).
    pub intervals: usize,
}

impl TGrid {
    pub fn new(t_min: f64, t_max: f64, points_per_decade: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return Err(Error::invalid(format!("bad t range [{t_min}, {t_max}]")));
        }
        if points_per_decade < 2 {
            return Err(Error::invalid("at least two points per decade are needed"));
        }
        let raw = (points_per_decade as f64 * (t_max / t_min).log10()).ceil() as usize;
        let intervals = raw.max(2).next_multiple_of(2);
        Ok(Self {
            t_min,
            t_max,
            points_per_decade,
            intervals,
        })
    }

    /// `[spacing/4, 4·diameter]`.
    pub fn standard(space: &MetricMeasureSpace, points_per_decade: usize) -> Result<Self> {
        Self::new(space.min_spacing() / 4.0, 4.0 * space.diameter(), points_per_decade)
    }

    /// Same range, half the step.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.t_min, self.t_max, 2 * self.points_per_decade)
    }

    fn step(&self) -> f64 {
        (self.t_max / self.t_min).ln() / self.intervals as f64
    }

    /// Fine midpoints sit at odd multiples of half the fine step, coarse
    /// midpoints at `2 mod 4` multiples. Returns `(t, fine weight, coarse weight)`.
    fn nodes(&self) -> Vec<(f64, f64, f64)> {
        let h = self.step();
        let (a, m) = (self.t_min.ln(), 2 * self.intervals);
        (1..m)
            .filter(|k| k % 2 == 1 || k % 4 == 2)
            .map(|k| {
                let t = (a + k as f64 * 0.5 * h).exp();
                if k % 2 == 1 {
                    (t, h, 0.0)
                } else {
                    (t, 0.0, 2.0 * h)
                }
            })
            .collect()
    }

    /// Fine-grid midpoints.
    pub fn fine_nodes(&self) -> Vec<f64> {
        self.nodes().into_iter().filter(|n| n.1 > 0.0).map(|n| n.0).collect()
    }

    fn check_space(&self, space: &MetricMeasureSpace) -> Result<()> {
        if self.t_min > space.min_spacing() * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "t_min = {} must not exceed the smallest distance {}",
                self.t_min,
                space.min_spacing()
            )));
        }
        if self.t_max <= space.diameter() {
            return Err(Error::invalid(format!(
                "t_max = {} must exceed the diameter {}",
                self.t_max,
                space.diameter()
            )));
        }
        Ok(())
    }
}

/// For every point, the others sorted by distance with running masses.
#[derive(Clone, Debug)]
pub struct BallIndex {
    order: Vec<Vec<u32>>,
    dist: Vec<Vec<f64>>,
    prefix_mu: Vec<Vec<f64>>,
}

impl BallIndex {
    pub fn new(space: &MetricMeasureSpace) -> Self {
        let mu = space.measure();
        let rows = crate::par::map_range(space.len(), |x| {
            let d = space.distances_from(x);
            let mut order: Vec<u32> = (0..space.len() as u32).collect();
            order.sort_by(|&a, &b| d[a as usize].total_cmp(&d[b as usize]).then(a.cmp(&b)));
            let dist: Vec<f64> = order.iter().map(|&y| d[y as usize]).collect();
            let mut prefix = Vec::with_capacity(order.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for &y in &order {
                acc += mu[y as usize];
                prefix.push(acc);
            }
            (order, dist, prefix)
        });
        let mut out = Self {
            order: Vec::with_capacity(rows.len()),
            dist: Vec::with_capacity(rows.len()),
            prefix_mu: Vec::with_capacity(rows.len()),
        };
        for (o, d, p) in rows {
            out.order.push(o);
            out.dist.push(d);
            out.prefix_mu.push(p);
        }
        out
    }

    /// Number of leading entries with `d(x, ·) < t`.
    pub fn strict_count(&self, x: usize, t: f64) -> usize {
        self.dist[x].partition_point(|&d| strictly_within(d, t))
    }

    /// Entries averaged at a quadrature node. Off ties this is the strict
    /// count; a node sitting on a distance takes the right limit in `t`,
    /// where the strict and closed balls agree.
    fn node_count(&self, x: usize, t: f64) -> usize {
        self.dist[x].partition_point(|&d| within(d, t))
    }

    /// `V(x, t)` for the closed ball.
    pub fn volume(&self, x: usize, t: f64) -> f64 {
        self.prefix_mu[x][self.dist[x].partition_point(|&d| within(d, t))]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SquareFunctionResult {
    pub values: Vec<f64>,
    pub k: u32,
    pub grid: TGrid,
    /// `∫ S_t` mass per unit `log t` at the fine nodes, `Σ_x (·) μ(x)`.
    pub profile: Vec<f64>,
    /// `‖S f‖₂` from the fine and coarse quadratures, without tails.
    pub l2_fine: f64,
    pub l2_coarse: f64,
    pub quadrature_change: f64,
    /// Exact `L²` contribution of `t < t_min` and `t > t_max`.
    pub head_tail_sq: f64,
    pub far_tail_sq: f64,
}

impl SquareFunctionResult {
    /// `(‖S f‖₂² + tails)^{1/2}`.
    pub fn l2_with_tails(&self) -> f64 {
        (self.l2_fine * self.l2_fine + self.head_tail_sq + self.far_tail_sq).sqrt()
    }

    /// Tail size relative to the quadrature part.
    pub fn tail_fraction(&self) -> f64 {
        let q = self.l2_fine * self.l2_fine;
        if q == 0.0 {
            0.0
        } else {
            (self.head_tail_sq + self.far_tail_sq) / q
        }
    }
}

/// Lower incomplete gamma `γ(a, x)` for integer `a ≥ 1`.
pub fn lower_gamma_int(a: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let af = a as f64;
    if x < af + 1.0 {
        // x^a e^{−x} Σ_k x^k / (a (a+1) ⋯ (a+k))
        let mut term = 1.0 / af;
        let mut sum = term;
        for k in 1..500 {
            term *= x / (af + k as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        (af * x.ln() - x).exp() * sum
    } else {
        gamma_int(a) - upper_gamma_int(a, x)
    }
}

/// Upper incomplete gamma `Γ(a, x) = (a−1)! e^{−x} Σ_{k<a} x^k/k!`.
pub fn upper_gamma_int(a: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return gamma_int(a);
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..a {
        term *= x / k as f64;
        sum += term;
    }
    gamma_int(a) * (-x).exp() * sum
}

pub fn gamma_int(a: u32) -> f64 {
    (1..a).map(|k| k as f64).product()
}

/// `∫₀^∞ (t²λ)^{2K} e^{−2t²λ} dt/t = Γ(2K) / 2^{2K+1}`, for any `λ > 0`.
pub fn t_integral_exact(k: u32) -> f64 {
    gamma_int(2 * k) / 2f64.powi(2 * k as i32 + 1)
}

/// Evaluates `S_{h,K}` for one operator, `K` and `t` grid.
pub struct SquareFunction<'a> {
    decomp: &'a SpectralDecomposition,
    index: BallIndex,
    grid: TGrid,
    k: u32,
    nodes: Vec<(f64, f64, f64)>,
}

impl<'a> SquareFunction<'a> {
    pub fn new(decomp: &'a SpectralDecomposition, k: u32, grid: TGrid) -> Result<Self> {
        if k < 1 {
            return Err(Error::invalid("K must be at least 1"));
        }
        grid.check_space(decomp.space())?;
        Ok(Self {
            index: BallIndex::new(decomp.space()),
            nodes: grid.nodes(),
            decomp,
            grid,
            k,
        })
    }

    pub fn with_standard_grid(decomp: &'a SpectralDecomposition, k: u32) -> Result<Self> {
        let grid = TGrid::standard(decomp.space(), DEFAULT_POINTS_PER_DECADE)?;
        Self::new(decomp, k, grid)
    }

    pub fn decomp(&self) -> &SpectralDecomposition {
        self.decomp
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn grid(&self) -> &TGrid {
        &self.grid
    }

    fn factor(&self, t: f64, lambda: f64) -> f64 {
        let u = t * t * lambda;
        if u == 0.0 {
            0.0
        } else {
            u.powi(self.k as i32) * (-u).exp()
        }
    }

    /// Square function of `f`; errors when the coarse and fine quadratures
    /// differ by [`QUADRATURE_TOL`] or more.
    pub fn evaluate(&self, f: &[f64]) -> Result<SquareFunctionResult> {
        let r = self.evaluate_unchecked(f)?;
        if r.quadrature_change >= QUADRATURE_TOL {
            return Err(Error::QuadratureTooCoarse {
                change: r.quadrature_change,
            });
        }
        Ok(r)
    }

    /// As [`evaluate`](Self::evaluate), without the refinement check.
    pub fn evaluate_unchecked(&self, f: &[f64]) -> Result<SquareFunctionResult> {
        let d = self.decomp;
        let c = d.coefficients(f)?;
        let lam = d.eigenvalues();
        let null: f64 = c.iter().zip(lam).filter(|(_, &l)| l == 0.0).map(|(c, _)| c * c).sum();
        if null > 1e-20 * c.iter().map(|c| c * c).sum::<f64>().max(f64::MIN_POSITIVE) {
            log::debug!("square function input has a null-space component; it does not contribute");
        }
        let n = d.len();
        let phi = Mat::from_fn(n, self.nodes.len(), |i, m| c[i] * self.factor(self.nodes[m].0, lam[i]));
        let g = d.vectors() * &phi;
        let mu = d.space().measure();
        let index = &self.index;
        let per_node: Vec<Vec<f64>> = crate::par::map_range(self.nodes.len(), |m| {
            let t = self.nodes[m].0;
            let col = g.col(m);
            (0..n)
                .map(|x| {
                    let s = index.node_count(x, t);
                    let inner: f64 = index.order[x][..s]
                        .iter()
                        .map(|&y| {
                            let v = col[y as usize];
                            v * v * mu[y as usize]
                        })
                        .sum();
                    inner / index.volume(x, t)
                })
                .collect()
        });
        let mut fine = vec![0.0; n];
        let mut coarse = vec![0.0; n];
        let mut profile = Vec::with_capacity(self.grid.intervals);
        for (&(_, wf, wc), v) in self.nodes.iter().zip(&per_node) {
            if wf > 0.0 {
                fine.iter_mut().zip(v).for_each(|(a, b)| *a += wf * b);
                profile.push(v.iter().zip(mu).map(|(a, m)| a * m).sum());
            } else {
                coarse.iter_mut().zip(v).for_each(|(a, b)| *a += wc * b);
            }
        }
        let l2 = |s: &[f64]| s.iter().zip(mu).map(|(a, m)| a * m).sum::<f64>().sqrt();
        let (l2_fine, l2_coarse) = (l2(&fine), l2(&coarse));
        let quadrature_change = if l2_fine > 0.0 {
            (l2_fine - l2_coarse).abs() / l2_fine
        } else {
            0.0
        };
        let a = 2 * self.k;
        let scale = 1.0 / 2f64.powi(a as i32 + 1);
        let (mut head, mut far) = (0.0, 0.0);
        for (ci, &l) in c.iter().zip(lam) {
            if l == 0.0 {
                continue;
            }
            let w = ci * ci * scale;
            head += w * lower_gamma_int(a, 2.0 * self.grid.t_min.powi(2) * l);
            far += w * upper_gamma_int(a, 2.0 * self.grid.t_max.powi(2) * l);
        }
        Ok(SquareFunctionResult {
            values: fine.into_iter().map(|v| v.max(0.0).sqrt()).collect(),
            k: self.k,
            grid: self.grid.clone(),
            profile,
            l2_fine,
            l2_coarse,
            quadrature_change,
            head_tail_sq: head,
            far_tail_sq: far,
        })
    }
}

/// `(Σ_x |v(x)|^p μ(x))^{1/p}`, a quasi-norm for `p < 1`.
pub fn lp_norm(mu: &[f64], v: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        v.iter().zip(mu).map(|(a, m)| a.abs() * m).sum()
    } else if p == 2.0 {
        v.iter().zip(mu).map(|(a, m)| a * a * m).sum::<f64>().sqrt()
    } else {
        v.iter().zip(mu).map(|(a, m)| a.abs().powf(p) * m).sum::<f64>().powf(1.0 / p)
    }
}
