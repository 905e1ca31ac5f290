//! Smoothness norms of sampled symbols.
//!
//! `W^{s,q}`: the `L^q` norm of `(I − d²/dx²)^{s/2} F`, i.e. of the inverse
//! transform of `(1 + ξ²)^{s/2} F̂`. The [`SobolevVariant::LiteralL2`]
//! variant always measures the result in `L²`.
//!
//! `B_s^{q,1}`: `‖T_{φ₀}F‖_q + Σ_{i≥1} 2^{is} ‖T_{φ_i}F‖_q` with
//! `φ₀ = 1` on `[−2, 2]`, supported in `[−4, 4]`, and
//! `φ_i(ξ) = φ₀(ξ/2^i) − φ₀(ξ/2^{i−1})` supported in `2^i ≤ |ξ| ≤ 2^{i+2}`.

use serde::Serialize;

use super::line::{frequency_multiply, LineFunction, LineGrid};
use super::Multiplier;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevVariant {
    /// `‖(I − d²)^{s/2} F‖_{L^q}`.
    #[default]
    Lq,
    /// `‖(I − d²)^{s/2} F‖_{L²}` regardless of `q`.
    LiteralL2,
}

fn check_exponents(s: f64, q: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("smoothness s must be ≥ 0, got {s}")));
    }
    if !(q >= 1.0) {
        return Err(Error::invalid(format!("q must be at least 1, got {q}")));
    }
    Ok(())
}

pub fn sobolev_norm(f: &LineFunction, s: f64, q: f64) -> Result<f64> {
    sobolev_norm_variant(f, s, q, SobolevVariant::Lq)
}

pub fn sobolev_norm_variant(f: &LineFunction, s: f64, q: f64, variant: SobolevVariant) -> Result<f64> {
    check_exponents(s, q)?;
    let g = if s == 0.0 {
        f.check_margin()?;
        f.clone()
    } else {
        frequency_multiply(f, |xi| (1.0 + xi * xi).powf(s / 2.0))?
    };
    match variant {
        SobolevVariant::Lq => g.lq_norm(q),
        SobolevVariant::LiteralL2 => g.lq_norm(2.0),
    }
}

/// C^∞ step from 0 at `x ≤ 0` to 1 at `x ≥ 1`.
fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// `φ₀`: 1 on `[−2, 2]`, 0 outside `[−4, 4]`.
pub fn low_window(xi: f64) -> f64 {
    1.0 - smooth_step((xi.abs() - 2.0) / 2.0)
}

/// `φ_i` for `i ≥ 1`.
pub fn block_window(i: u32, xi: f64) -> f64 {
    let s = 2f64.powi(i as i32);
    low_window(xi / s) - low_window(2.0 * xi / s)
}

#[derive(Clone, Debug, Serialize)]
pub struct BesovNorm {
    pub value: f64,
    /// Terms `2^{is}‖T_{φ_i}F‖_q`, `i = 0..`.
    pub terms: Vec<f64>,
    /// Geometric extrapolation of the blocks beyond the grid's Nyquist
    /// frequency; infinite when the last terms do not decay.
    pub tail_estimate: f64,
}

pub fn besov_norm(f: &LineFunction, s: f64, q: f64) -> Result<BesovNorm> {
    check_exponents(s, q)?;
    let nyquist = std::f64::consts::PI / f.grid.step;
    let top = (nyquist.log2().floor() as i32).max(1) as u32;
    let levels: Vec<u32> = (0..=top).collect();
    let terms = crate::par::map(&levels, |&i| -> Result<f64> {
        let g = if i == 0 {
            frequency_multiply(f, low_window)?
        } else {
            frequency_multiply(f, |xi| block_window(i, xi))?
        };
        Ok(2f64.powf(i as f64 * s) * g.lq_norm(q)?)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let value: f64 = terms.iter().sum();
    let tail_estimate = match terms.as_slice() {
        [.., a, b] if *b == 0.0 => 0.0,
        [.., a, b] if b < a => b * (b / a) / (1.0 - b / a),
        _ => f64::INFINITY,
    };
    Ok(BesovNorm {
        value,
        terms,
        tail_estimate,
    })
}

/// `max_t ‖φ · δ_t F‖_{W^{s,q}}` over `t_grid`.
pub fn sup_dilated_norm(
    f: &Multiplier,
    window: &Multiplier,
    s: f64,
    q: f64,
    t_grid: &[f64],
    grid: LineGrid,
) -> Result<f64> {
    if t_grid.is_empty() {
        return Err(Error::InsufficientData("empty dilation grid".into()));
    }
    let norms = crate::par::map(t_grid, |&t| -> Result<f64> {
        let g = window.product(&f.dilate(t)?);
        let sampled = LineFunction::sample(&g, grid)?;
        sobolev_norm(&sampled, s, q)
    });
    norms
        .into_iter()
        .try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::partition::phi_window;
    use std::f64::consts::PI;

    #[test]
    fn zero_function_has_zero_norms() {
        let g = LineGrid::new(8.0, 1.0 / 32.0).unwrap();
        let z = LineFunction::zeros(g);
        assert_eq!(sobolev_norm(&z, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(besov_norm(&z, 1.0, 2.0).unwrap().value, 0.0);
    }

    #[test]
    fn gaussian_l2_norm() {
        // ∫ e^{−2x²} dx = √(π/2)
        let g = LineGrid::new(12.0, 0.02).unwrap();
        let f = LineFunction::from_fn(g, |x| (-x * x).exp());
        let n = sobolev_norm(&f, 0.0, 2.0).unwrap();
        assert!((n - (PI / 2.0).sqrt().sqrt()).abs() < 1e-6);
    }

    #[test]
    fn h1_norm_of_gaussian() {
        // ‖F‖²_{H¹} = ‖F‖² + ‖F'‖² = √(π/2) (1 + 1) for F = e^{−x²}.
        let g = LineGrid::new(12.0, 0.02).unwrap();
        let f = LineFunction::from_fn(g, |x| (-x * x).exp());
        let n = sobolev_norm(&f, 1.0, 2.0).unwrap();
        assert!((n * n - 2.0 * (PI / 2.0).sqrt()).abs() < 1e-6, "{n}");
        let lit = sobolev_norm_variant(&f, 1.0, 4.0, SobolevVariant::LiteralL2).unwrap();
        assert!((lit - n).abs() < 1e-12);
    }

    #[test]
    fn windows_form_a_partition() {
        for k in 0..400 {
            let xi = k as f64 * 0.37;
            let total: f64 = low_window(xi) + (1..20).map(|i| block_window(i, xi)).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-12, "ξ={xi}");
            for i in 1..20 {
                let w = block_window(i, xi);
                assert!((0.0..=1.0).contains(&w));
            }
        }
    }

    #[test]
    fn single_block_symbol() {
        // F̂ concentrated near |ξ| = 2^{i₀+1}, where φ_{i₀} = 1.
        let i0 = 3u32;
        let xi0 = 2f64.powi(i0 as i32 + 1);
        let g = LineGrid::new(200.0, 0.02).unwrap();
        let f = LineFunction::from_fn(g, |x| (xi0 * x).cos() * (-(x / 20.0).powi(2)).exp());
        let b = besov_norm(&f, 1.0, 2.0).unwrap();
        let expect = 2f64.powi(i0 as i32) * f.lq_norm(2.0).unwrap();
        assert!((b.value - expect).abs() < 1e-3 * expect, "{} vs {expect}", b.value);
    }

    #[test]
    fn constant_symbol_sup_is_window_norm() {
        let g = LineGrid::new(8.0, 1.0 / 64.0).unwrap();
        let w = phi_window();
        let sup = sup_dilated_norm(&Multiplier::one(), &w, 1.0, 2.0, &[0.5, 1.0, 4.0], g).unwrap();
        let direct = sobolev_norm(&LineFunction::sample(&w, g).unwrap(), 1.0, 2.0).unwrap();
        assert!((sup - direct).abs() < 1e-12);
    }
}
