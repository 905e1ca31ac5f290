//! # speclab
//!
//! A numerical laboratory for spectral multipliers of non-negative
//! self-adjoint operators on finite metric measure spaces.
//!
//! The crate discretizes the full cast of objects that appear in
//! Hörmander-type multiplier theory on spaces of homogeneous type and
//! measures, at desk scale, every inequality that can be checked numerically:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`space`] | metric measure spaces, balls, annuli, doubling-dimension fits |
//! | [`calculus`] | operators, spectral decomposition, `F(√L)`, heat and wave propagators, Chebyshev fast path |
//! | [`multiplier`] | Bochner-Riesz symbols, dilations, dyadic partitions, Fourier truncation, Sobolev and Besov norms |
//! | [`estimates`] | `L^{p0} → L²` norm brackets, restriction constants, off-diagonal decay fits |
//! | [`hardy`] | square functions, Hardy norms, operator ratios and the Bochner-Riesz threshold sweep |
//! | [`harness`] | scenario registry, config files, sweeps, CSV and SVG output |
//!
//! ## Conventions
//!
//! Functions on a space are plain `Vec<f64>` indexed by point. Inner products
//! and norms are always taken in `L²(μ)`, i.e. `⟨f, g⟩ = Σ f(x) g(x) μ(x)`.
//! Integral kernels are taken with respect to `μ` as well:
//! `(Tf)(x) = Σ_y K(x, y) f(y) μ(y)`.
//!
//! Multipliers act on `√L`: the spectral decomposition stores the eigenvalues
//! `λ_i` of `L`, and `F(√L)` multiplies the `i`-th coefficient by `F(√λ_i)`.
//!
//! ## Parallelism
//!
//! With the default `parallel` feature, sweeps, ensembles and quadrature
//! grids are spread over the rayon pool (see [`par`]). Every parallel map
//! collects in input order, so results are identical with and without the
//! feature.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod estimates;
pub mod hardy;
pub mod harness;
pub mod multiplier;
pub mod par;
pub mod plot;
pub mod space;

pub use calculus::{
    apply_multiplier, multiplier_kernel, spectral_decompose, KernelMatrix, SelfAdjointOperator,
    SpectralDecomposition,
};
pub use error::{Error, Result};
pub use multiplier::Multiplier;
pub use space::{Ball, MetricMeasureSpace};
