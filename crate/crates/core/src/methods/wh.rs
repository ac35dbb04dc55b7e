//! Wu–Hamada t-type (location) and z-type (dispersion) tests.

use crate::data::ReplicatedData;
use crate::design::Design;
use crate::distributions::sampling::{smm_quantile, Dof};
use crate::distributions::special::{normal_upper_quantile, t_two_sided_critical};
use crate::distributions::RngState;
use crate::effects::{check_shapes, fit, Model};
use crate::error::{Error, Result};
use crate::report::{check_alpha, ErrorRate, Method, ReportMeta, TestReport};

/// Default Monte Carlo size for studentized-maximum-modulus cutoffs.
pub const DEFAULT_SMM_SAMPLES: usize = 200_000;

/// t_l = α̂_l / sqrt(Σ s_i² / (m² n)).
pub fn wh_t_statistics(design: &Design, data: &ReplicatedData) -> Result<Vec<f64>> {
    let est = fit(design, data, Model::Location)?;
    let m = data.runs() as f64;
    let n = data.replicates() as f64;
    let pooled: f64 = data.variances().iter().sum();
    if pooled <= 0.0 {
        return Err(Error::Degenerate(
            "every run has zero sample variance; the t statistics are undefined".into(),
        ));
    }
    let se = (pooled / (m * m * n)).sqrt();
    Ok(est.coefficients.iter().map(|a| a / se).collect())
}

/// z_l = γ̂_l / sqrt(2 / (m(n − 1))).
pub fn wh_z_statistics(design: &Design, data: &ReplicatedData) -> Result<Vec<f64>> {
    let est = fit(design, data, Model::Dispersion)?;
    Ok(z_from_gammas(&est.coefficients, data.runs(), data.replicates()))
}

pub(crate) fn z_from_gammas(gammas: &[f64], runs: usize, replicates: usize) -> Vec<f64> {
    let se = (2.0 / (runs as f64 * (replicates as f64 - 1.0))).sqrt();
    gammas.iter().map(|g| g / se).collect()
}

/// IER: t_{m(n−1), 1−α/2}. EER: Monte Carlo SMM(I, m(n−1)) quantile at 1 − α.
pub fn wh_location_critical(
    alpha: f64,
    runs: usize,
    replicates: usize,
    effects: usize,
    rate: ErrorRate,
    rng: RngState,
    samples: usize,
) -> Result<f64> {
    check_alpha(alpha)?;
    if replicates < 2 {
        return Err(Error::Domain(format!("need n >= 2 replicates, got {replicates}")));
    }
    let df = (runs * (replicates - 1)) as u64;
    match rate {
        ErrorRate::Ier => t_two_sided_critical(alpha, df as f64),
        ErrorRate::Eer => smm_quantile(rng, effects, Dof::Finite(df), 1.0 - alpha, samples),
    }
}

/// IER: Φ⁻¹(1 − α/2). EER: Monte Carlo SMM(I, ∞) quantile at 1 − α.
pub fn wh_dispersion_critical(
    alpha: f64,
    effects: usize,
    rate: ErrorRate,
    rng: RngState,
    samples: usize,
) -> Result<f64> {
    check_alpha(alpha)?;
    match rate {
        ErrorRate::Ier => normal_upper_quantile(0.5 * alpha),
        ErrorRate::Eer => smm_quantile(rng, effects, Dof::Infinite, 1.0 - alpha, samples),
    }
}

pub fn wh_test(
    design: &Design,
    data: &ReplicatedData,
    model: Model,
    rate: ErrorRate,
    alpha: f64,
    rng: RngState,
    samples: usize,
) -> Result<TestReport> {
    check_shapes(design, data)?;
    let est = fit(design, data, model)?;
    let (stats, critical) = match model {
        Model::Location => (
            wh_t_statistics(design, data)?,
            wh_location_critical(alpha, data.runs(), data.replicates(), est.len(), rate, rng, samples)?,
        ),
        Model::Dispersion => (
            z_from_gammas(&est.coefficients, data.runs(), data.replicates()),
            wh_dispersion_critical(alpha, est.len(), rate, rng, samples)?,
        ),
    };
    let monte_carlo = rate == ErrorRate::Eer;
    let meta = ReportMeta {
        runs: data.runs(),
        replicates: data.replicates(),
        effects: est.len(),
        rng: monte_carlo.then_some(rng),
        mc_samples: monte_carlo.then_some(samples),
        ..Default::default()
    };
    Ok(TestReport::new(Method::Wh, rate, alpha, &est, &stats, critical, meta))
}
