//! Functional calculus of non-negative self-adjoint operators on `L²(X, μ)`.
//!
//! The dense path diagonalizes the operator once (up to
//! [`DENSE_LIMIT`] points) and evaluates `F(√L)` exactly on the spectrum.
//! The sparse path ([`chebyshev_apply`]) needs only matrix-vector products.

mod chebyshev;
mod kernel;
mod operator;
mod propagation;
mod spectral;

pub use chebyshev::{chebyshev_apply, chebyshev_coefficients, ChebyshevResult};
pub use kernel::{heat_operator, kernel_from_values, multiplier_kernel, wave_cosine, KernelMatrix};
pub use operator::{CsrMatrix, SelfAdjointOperator, DENSE_LIMIT};
pub use propagation::{
    cone_slack, kernel_support_radius, kernel_tail_fraction, verify_davies_gaffney, verify_finite_speed,
    DaviesGaffneyReport, DaviesGaffneySample, FiniteSpeedReport, DEFAULT_MASS_TOL,
};
pub use spectral::{apply_multiplier, spectral_decompose, spectral_sup, SpectralDecomposition, EIG_TOL};
