//! Square functions, Hardy norms `‖S_{h,K} f‖_{L^p}` on the range of `L`,
//! and ensemble estimates of multiplier norms on `H^p_L`.

mod ratio;
mod square;
mod sweep;

pub use ratio::{
    atom, atom_order, bump, default_k, ensemble_norms, hardy_norm, hardy_operator_ratio, random_range_vectors,
    EnsembleSpec, HardyRatio,
};
pub use square::{
    gamma_int, lower_gamma_int, lp_norm, t_integral_exact, upper_gamma_int, BallIndex, SquareFunction,
    SquareFunctionResult, TGrid, DEFAULT_POINTS_PER_DECADE, QUADRATURE_TOL,
};
pub use sweep::{
    riesz_threshold_sweep, CellFailure, DeltaVerdict, HardyRatioRow, HardyRatioTable, RieszSweep, SweepResolution,
    Verdict, MIN_RESOLUTIONS, VERDICT_FACTOR,
};
