use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not symmetric in L²(μ): |μ(x)A(x,y) - μ(y)A(y,x)| = {defect:e} at ({row}, {col})")]
    NotMuSymmetric { row: usize, col: usize, defect: f64 },

    #[error("operator has a genuinely negative eigenvalue {value:e} (clamp tolerance {tolerance:e})")]
    NegativeSpectrum { value: f64, tolerance: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("multiplier `{label}` is not finite at √λ = {sqrt_eigenvalue} (eigenvalue {eigenvalue})")]
    MultiplierUndefined {
        label: String,
        eigenvalue: f64,
        sqrt_eigenvalue: f64,
    },

    #[error("dense path limited to {limit} points, operator has {size}; use the Chebyshev path")]
    TooLarge { size: usize, limit: usize },

    #[error("sample grid lacks margin: {fraction:e} of the L² mass sits in the outer boundary zones")]
    InsufficientMargin { fraction: f64 },

    #[error("t-grid too coarse: halving the step changes ‖S f‖₂ by {change:.3}% (limit 1%); raise points_per_decade")]
    QuadratureTooCoarse { change: f64 },

    #[error("spectral window [{low}, {high}] contains no eigenvalue of √L")]
    EmptySpectralWindow { low: f64, high: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("finite speed propagation not verified: {0}")]
    FiniteSpeedNotVerified(String),

    #[error("no doubling fit possible: {0}")]
    DegenerateSpace(String),

    #[error("parse error in {path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
