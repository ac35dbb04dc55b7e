//! The four testing procedures.

pub mod lenth;
pub mod mc;
pub mod vca;
pub mod wh;

use crate::distributions::RngState;
use crate::report::ErrorRate;

pub use lenth::{lenth_critical, lenth_pse, lenth_test, PseResult, DEFAULT_LENTH_SAMPLES};
pub use mc::{
    a_n, disp_eer_critical, disp_ier_critical, mc_location_eer_critical, mc_location_ier_critical, mc_test,
    variance_weights, VarianceWeights, DEFAULT_MC_SAMPLES,
};
pub use vca::{jackknife, jackknife_variance, vca_critical, vca_f_statistics, vca_test, Measure};
pub use wh::{
    wh_dispersion_critical, wh_location_critical, wh_t_statistics, wh_test, wh_z_statistics, DEFAULT_SMM_SAMPLES,
};

/// A critical value estimated from a Monte Carlo null sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCriticalResult {
    pub critical: f64,
    pub samples: usize,
    pub rng: RngState,
    pub alpha: f64,
    pub error_rate: ErrorRate,
    /// Binomial-interval estimate of the quantile's standard error.
    pub quantile_se: f64,
}
