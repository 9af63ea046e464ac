//! Nonparametric estimation of the time-dependent partial area under the ROC
//! curve (pAUC) for a continuous marker and right-censored survival times.
//!
//! The pipeline is:
//!
//! 1. [`data`]: load and validate a [`Cohort`] of `(time, status, marker)` records.
//! 2. [`survival`]: nearest-neighbor conditional Kaplan–Meier surfaces
//!    `Ŝ_T(t | Y_j)` and the joint survivor `Ŝ(t, y)`.
//! 3. [`pauc`]: closed-form pAUC point estimates (censored and complete data).
//! 4. [`inference`]: influence functions, covariance, pointwise intervals and
//!    multiplier-resampling simultaneous bands.
//! 5. [`bandwidth`]: leave-one-out ISE bandwidth selection.
//! 6. [`compare`]: two-sample differences of pAUC curves.
//! 7. [`simulate`]: the lognormal/exponential generator, a numerical truth
//!    oracle and a Monte Carlo coverage harness.

pub mod bandwidth;
pub mod compare;
pub mod data;
mod error;
pub mod inference;
mod par;
pub mod pauc;
pub mod quadrature;
pub mod simulate;
pub mod stats;
pub mod survival;

pub use bandwidth::{loo_residuals, select_bandwidth, BandwidthSelection, Residual};
pub use compare::{compare_paucs, CompareConfig, ComparisonResult};
pub use data::{default_grid, load_cohort, Cohort, CohortSummary, ColumnMap, SurvivalRecord, TimeGrid};
pub use error::{Error, Result};
pub use inference::{
    covariance, influence_matrix, pointwise_band, pointwise_ci, simultaneous_band, BandKind,
    ConfidenceBand, CovarianceFunction, InfluenceMatrix,
};
pub use pauc::{
    fpr_quantile, pauc_censored, pauc_complete, pauc_range, EstimatorKind, PairMethod,
    PaucEstimate, PaucRange, Quantile,
};
pub use survival::{conditional_km, ConditionalSurvivalSurface, JointSurvivor};

/// Lower bound on `Ŝ_T(t)` and `1 − Ŝ_T(t)` below which a time point is
/// treated as having no cases or no controls.
pub const DEGENERACY_EPS: f64 = 1e-6;
