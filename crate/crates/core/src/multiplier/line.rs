//! Sampled functions on the line and the discrete Fourier transform.
//!
//! Convention: `F̂(ξ) = ∫ F(x) e^{−ixξ} dx`. A function sampled at
//! `x_k = (k − c)η`, `k = 0..M` (`M` odd, `c = (M−1)/2`), is zero padded to
//! `P = 5M` points; then `F̂(ξ_m) ≈ η · FFT(F)_m` at `ξ_m = 2πm/(Pη)`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::Multiplier;
use crate::{Error, Result};

pub const PAD_FACTOR: usize = 5;
/// Fraction of the half-width treated as the boundary zone.
const MARGIN_ZONE: f64 = 1.0 / 8.0;
/// Largest admissible share of the `L²` mass inside the boundary zones.
pub const MARGIN_TOL: f64 = 1e-3;

/// A symmetric uniform grid with an odd number of points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineGrid {
    pub step: f64,
    pub points: usize,
}

impl LineGrid {
    /// Grid on `[−half_width, half_width]` with step `≤ step`.
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        if !(half_width > 0.0 && step > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid("line grid needs positive half-width and step"));
        }
        let half = (half_width / step).round().max(1.0) as usize;
        Ok(Self {
            step: half_width / half as f64,
            points: 2 * half + 1,
        })
    }

    /// Default grid for a symbol supported in `[−R, R]`: half-width `8R`.
    pub fn for_support(radius: f64, step: f64) -> Result<Self> {
        Self::new(8.0 * radius, step)
    }

    pub fn center(&self) -> usize {
        (self.points - 1) / 2
    }

    pub fn half_width(&self) -> f64 {
        self.center() as f64 * self.step
    }

    pub fn x(&self, k: usize) -> f64 {
        (k as f64 - self.center() as f64) * self.step
    }
}

/// Samples on a [`LineGrid`]; complex so that transforms and truncations
/// share one type.
#[derive(Clone, Debug, PartialEq)]
pub struct LineFunction {
    pub grid: LineGrid,
    pub values: Vec<Complex64>,
}

impl LineFunction {
    pub fn from_fn(grid: LineGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.points).map(|k| Complex64::new(f(grid.x(k)), 0.0)).collect();
        Self { grid, values }
    }

    /// Samples the even extension of `F`. Symbols with declared support must
    /// fit four times inside the grid.
    pub fn sample(f: &Multiplier, grid: LineGrid) -> Result<Self> {
        if let Some(r) = f.support_radius() {
            if grid.half_width() < 4.0 * r * (1.0 - 1e-12) {
                return Err(Error::invalid(format!(
                    "grid half-width {} is below 4× the support radius {r}",
                    grid.half_width()
                )));
            }
        }
        let out = Self::from_fn(grid, |x| f.eval(x));
        if let Some(k) = out.values.iter().position(|v| !v.re.is_finite()) {
            return Err(Error::MultiplierUndefined {
                label: f.label().to_string(),
                eigenvalue: grid.x(k) * grid.x(k),
                sqrt_eigenvalue: grid.x(k).abs(),
            });
        }
        Ok(out)
    }

    pub fn zeros(grid: LineGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.points],
        }
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Quadrature `(Σ |F_k|^q η)^{1/q}`; `q = ∞` is the grid maximum.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::invalid(format!("q must be at least 1, got {q}")));
        }
        if q.is_infinite() {
            return Ok(self.values.iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
        let s: f64 = self.values.iter().map(|v| v.norm().powf(q)).sum();
        Ok((s * self.grid.step).powf(1.0 / q))
    }

    /// Share of the `L²` mass in the outer eighth at either end.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let edge = (1.0 - MARGIN_ZONE) * self.grid.half_width();
        let mut total = 0.0;
        let mut outer = 0.0;
        for (k, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if self.grid.x(k).abs() > edge {
                outer += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn check_margin(&self) -> Result<()> {
        let fraction = self.boundary_mass_fraction();
        if fraction > MARGIN_TOL {
            return Err(Error::InsufficientMargin { fraction });
        }
        Ok(())
    }
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    plan.process(buf);
}

/// Padded transform in FFT order, already scaled by `η`.
fn padded_spectrum(f: &LineFunction) -> Vec<Complex64> {
    let m = f.grid.points;
    let p = PAD_FACTOR * m;
    let c = f.grid.center();
    let mut buf = vec![Complex64::new(0.0, 0.0); p];
    for (k, v) in f.values.iter().enumerate() {
        // x_k = (k − c)η lands at index (k − c) mod P.
        buf[(k + p - c) % p] = *v;
    }
    fft_in_place(&mut buf, false);
    buf.iter_mut().for_each(|v| *v *= f.grid.step);
    buf
}

/// Signed frequency index of FFT slot `j`.
fn signed_index(j: usize, p: usize) -> i64 {
    if j <= (p - 1) / 2 {
        j as i64
    } else {
        j as i64 - p as i64
    }
}

fn centered(buf: Vec<Complex64>, step: f64) -> LineFunction {
    let p = buf.len();
    let c = (p - 1) / 2;
    let mut values = vec![Complex64::new(0.0, 0.0); p];
    for (j, v) in buf.into_iter().enumerate() {
        values[(signed_index(j, p) + c as i64) as usize] = v;
    }
    LineFunction {
        grid: LineGrid { step, points: p },
        values,
    }
}

/// `F̂` on the frequency grid `ξ_m = 2πm/(Pη)`, `|m| ≤ (P−1)/2`.
pub fn fourier_transform(f: &LineFunction) -> Result<LineFunction> {
    f.check_margin()?;
    let p = PAD_FACTOR * f.grid.points;
    let dxi = 2.0 * std::f64::consts::PI / (p as f64 * f.grid.step);
    Ok(centered(padded_spectrum(f), dxi))
}

/// Applies the frequency multiplier `ψ(ξ)` and returns the result on the
/// padded spatial grid (`P` points, same step).
pub fn frequency_multiply(f: &LineFunction, psi: impl Fn(f64) -> f64) -> Result<LineFunction> {
    f.check_margin()?;
    let mut buf = padded_spectrum(f);
    let p = buf.len();
    let dxi = 2.0 * std::f64::consts::PI / (p as f64 * f.grid.step);
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= psi(signed_index(j, p) as f64 * dxi);
    }
    fft_in_place(&mut buf, true);
    // Undo the η scaling and the unnormalized inverse.
    let scale = 1.0 / (p as f64 * f.grid.step);
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(centered(buf, f.grid.step))
}

/// `T_ψ F` with `(T_ψ F)^ = ψ F̂`.
pub fn fourier_truncate(f: &LineFunction, psi: impl Fn(f64) -> f64) -> Result<LineFunction> {
    frequency_multiply(f, psi)
}
