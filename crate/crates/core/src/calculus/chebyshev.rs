//! Matrix-free `F(√L) f` by a Chebyshev expansion of `λ ↦ F(√λ)` on
//! `[0, b]`, where `b` is the Gershgorin bound of the spectrum.
//!
//! Coefficients come from Chebyshev–Gauss interpolation. The remainder is
//! estimated from an expansion four times finer: `2 Σ_{k>d} |c_k|`.

use serde::Serialize;

use super::operator::SelfAdjointOperator;
use crate::multiplier::Multiplier;
use crate::{Error, Result};

const POWER_ITERATIONS: usize = 60;

#[derive(Clone, Debug, Serialize)]
pub struct ChebyshevResult {
    pub values: Vec<f64>,
    pub degree: usize,
    /// Upper end of the expansion interval.
    pub interval_end: f64,
    /// Power-iteration estimate of the spectral radius (a lower bound).
    pub radius_estimate: f64,
    /// Uniform bound on `|p(λ) − F(√λ)|` over `[0, b]`, from the finer
    /// expansion.
    pub remainder_estimate: f64,
}

/// Chebyshev–Gauss coefficients of `h` on `[0, b]` with `m` nodes.
pub fn chebyshev_coefficients(h: impl Fn(f64) -> f64, b: f64, m: usize) -> Vec<f64> {
    let nodes: Vec<f64> = (0..m)
        .map(|j| {
            let theta = std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
            h(0.5 * b * (theta.cos() + 1.0))
        })
        .collect();
    (0..m)
        .map(|k| {
            let s: f64 = nodes
                .iter()
                .enumerate()
                .map(|(j, v)| v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / m as f64).cos())
                .sum();
            2.0 * s / m as f64
        })
        .collect()
}

/// Zeroes coefficients below rounding level so that exact low-degree
/// symbols (constants in particular) are reproduced exactly.
fn chop(c: &mut [f64]) {
    let scale: f64 = c.iter().map(|v| v.abs()).sum();
    let eps = 8.0 * f64::EPSILON * scale;
    for v in c.iter_mut() {
        if v.abs() <= eps {
            *v = 0.0;
        }
    }
}

pub fn chebyshev_apply(op: &SelfAdjointOperator, f_mult: &Multiplier, f: &[f64], degree: usize) -> Result<ChebyshevResult> {
    if degree < 1 {
        return Err(Error::invalid("Chebyshev degree must be at least 1"));
    }
    let n = op.len();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let b = op.gershgorin_bound();
    let radius_estimate = op.power_iteration(POWER_ITERATIONS)?;
    if !b.is_finite() || radius_estimate > b * (1.0 + 1e-8) {
        return Err(Error::Eigensolver(format!(
            "spectral radius estimate {radius_estimate} exceeds the Gershgorin bound {b}"
        )));
    }
    let h = |l: f64| f_mult.eval(l.max(0.0).sqrt());
    if b == 0.0 {
        // L = 0: F(√L) = F(0) I.
        let v = h(0.0);
        return Ok(ChebyshevResult {
            values: f.iter().map(|x| v * x).collect(),
            degree,
            interval_end: 0.0,
            radius_estimate,
            remainder_estimate: 0.0,
        });
    }
    let fine = chebyshev_coefficients(h, b, 4 * (degree + 1));
    if let Some(v) = fine.iter().find(|v| !v.is_finite()) {
        return Err(Error::MultiplierUndefined {
            label: f_mult.label().to_string(),
            eigenvalue: f64::NAN,
            sqrt_eigenvalue: *v,
        });
    }
    let remainder_estimate = 2.0 * fine[degree + 1..].iter().map(|v| v.abs()).sum::<f64>();
    let mut c = chebyshev_coefficients(h, b, degree + 1);
    chop(&mut c);

    // Three-term recurrence in the shifted operator A' = (2/b) A − I.
    let shifted = |v: &[f64]| -> Result<Vec<f64>> {
        let av = op.apply(v)?;
        Ok(av.iter().zip(v).map(|(a, x)| 2.0 / b * a - x).collect())
    };
    let mut out: Vec<f64> = f.iter().map(|x| 0.5 * c[0] * x).collect();
    let mut prev = f.to_vec();
    let mut cur = shifted(f)?;
    if c[1] != 0.0 {
        out.iter_mut().zip(&cur).for_each(|(o, t)| *o += c[1] * t);
    }
    for ck in c.iter().skip(2) {
        let ac = shifted(&cur)?;
        let next: Vec<f64> = ac.iter().zip(&prev).map(|(a, p)| 2.0 * a - p).collect();
        if *ck != 0.0 {
            out.iter_mut().zip(&next).for_each(|(o, t)| *o += ck * t);
        }
        prev = cur;
        cur = next;
    }
    Ok(ChebyshevResult {
        values: out,
        degree,
        interval_end: b,
        radius_estimate,
        remainder_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{apply_multiplier, spectral_decompose};
    use crate::space::{build_grid_space, Topology};
    use std::sync::Arc;

    fn torus_op(n: usize) -> SelfAdjointOperator {
        let s = Arc::new(build_grid_space(1, n, 1.0, Topology::Torus).unwrap());
        SelfAdjointOperator::second_difference(s).unwrap()
    }

    #[test]
    fn constant_symbol_is_exact() {
        let op = torus_op(32);
        let f: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
        for degree in [1, 5, 40] {
            let r = chebyshev_apply(&op, &Multiplier::one(), &f, degree).unwrap();
            assert_eq!(r.values, f);
        }
        assert!(chebyshev_apply(&op, &Multiplier::one(), &f, 0).is_err());
    }

    #[test]
    fn polynomial_symbol_is_exact_to_rounding() {
        // F(√λ) = λ is degree one in λ.
        let op = torus_op(16);
        let f: Vec<f64> = (0..16).map(|i| (i * i % 7) as f64).collect();
        let r = chebyshev_apply(&op, &Multiplier::new("square", |l| l * l), &f, 3).unwrap();
        let lf = op.apply(&f).unwrap();
        for (a, b) in r.values.iter().zip(&lf) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn agrees_with_dense_path_within_remainder() {
        let op = torus_op(128);
        let d = spectral_decompose(&op).unwrap();
        let f: Vec<f64> = (0..128).map(|i| if i == 3 { 1.0 } else { 0.0 }).collect();
        let g = Multiplier::gaussian(1.0);
        let exact = apply_multiplier(&d, &g, &f).unwrap();
        let mut last = f64::INFINITY;
        for degree in [8, 16, 32] {
            let r = chebyshev_apply(&op, &g, &f, degree).unwrap();
            let err = r.values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= r.remainder_estimate + 1e-13, "degree {degree}: {err} > {}", r.remainder_estimate);
            assert!(err < last || err < 1e-13);
            last = err;
        }
    }
}
