//! Spectral multipliers: symbols, dilations, dyadic pieces, Fourier
//! truncation on the line and smoothness norms.

mod function;
mod line;
mod norms;
mod partition;

pub use function::{dilated_lq_norm, Multiplier};
pub use line::{
    fourier_transform, fourier_truncate, frequency_multiply, LineFunction, LineGrid, MARGIN_TOL, PAD_FACTOR,
};
pub use norms::{
    besov_norm, block_window, low_window, sobolev_norm, sobolev_norm_variant, sup_dilated_norm, BesovNorm,
    SobolevVariant,
};
pub use partition::{bump, dyadic_partition, phi, phi_window, PartitionFamily};
