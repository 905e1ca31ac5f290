//! Operator-norm measurements: `L^{p0} → L²` brackets, restriction-type
//! constants, heat and resolvent conditions, spectral-measure densities and
//! decay fits in dyadic annuli.

mod conditions;
mod decay;
mod fit;
mod opnorm;
mod restriction;
mod spectral_measure;

pub use conditions::{
    condition_cross_report, e_condition, g_condition, ConditionCrossReport, ConditionReport, ConditionRow,
    ConditionSample,
};
pub use decay::{
    atom_ensemble, criterion_check, decay_prefactor, offdiag_decay, DecayFitReport, DecayRegime, DecayRow,
    FLOOR_MARGIN, FLOOR_REL, MIN_FIT_POINTS,
};
pub use fit::{bootstrap_slope_width, least_squares, LinearFit, BOOTSTRAP_RESAMPLES};
pub use opnorm::{
    block_norm_p_to_2, norm_1_to_2, norm_2_to_2, op_norm_p_to_2, KernelBlock, OperatorNormEstimate, TestEnsemble,
    EXHAUSTIVE_POINT_MASSES, RANDOM_SIGN_VECTORS,
};
pub use restriction::{restriction_constant, restriction_prefactor, RestrictionReport, RestrictionRow};
pub use spectral_measure::{restriction_exponent, spectral_measure_norm, spectral_power_law, SpectralMeasureEstimate};
