//! Random sampling and special functions shared by every method.

pub mod rng;
pub mod sampling;
pub mod special;

pub use rng::RngState;
pub use sampling::{
    empirical_quantile, sample_chi_square, sample_mvn_max_abs, smm_quantile, ChiSquareSampler, Dof,
    EmpiricalSample, PsdFactor, MIN_MC_SAMPLES,
};
pub use special::{normal_cdf, normal_quantile, normal_upper_quantile, trigamma};
