//! Monte Carlo critical values for the location model and exact-variance
//! critical values for the dispersion model.
//!
//! Location: under the null, t_l = U_l / sqrt(Σ ρ_i² V_i / (n − 1)) with
//! U ~ MVN(0, Xᵀ diag(ρ²) X) and V_i iid χ²_{n−1}, independent of U. The ρ_i²
//! are estimated by s_i² / Σ s_k² from the observed data.
//!
//! Dispersion: log s_i² has variance trigamma((n−1)/2) rather than the usual
//! 2/(n−1), so normal cutoffs are inflated by a_n.

use super::wh::{wh_t_statistics, z_from_gammas};
use super::McCriticalResult;
use crate::data::ReplicatedData;
use crate::design::Design;
use crate::distributions::sampling::{
    blocked, check_mc_samples, select_quantile, ChiSquareSampler, EmpiricalSample, PsdFactor,
};
use crate::distributions::special::{normal_upper_quantile, trigamma};
use crate::distributions::RngState;
use crate::effects::{check_shapes, fit, Model};
use crate::error::{Error, Result};
use crate::report::{check_alpha, ErrorRate, Method, ReportMeta, TestReport};
use rand::Rng;
use rand_distr::StandardNormal;

pub const DEFAULT_MC_SAMPLES: usize = 100_000;

/// ρ̂_i² = s_i² / Σ s_k².
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceWeights {
    rho2: Vec<f64>,
}

impl VarianceWeights {
    /// Equal weights 1/m, the homogeneous-variance case.
    pub fn homogeneous(runs: usize) -> Result<Self> {
        variance_weights(&vec![1.0; runs])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rho2
    }

    pub fn len(&self) -> usize {
        self.rho2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho2.is_empty()
    }
}

pub fn variance_weights(s2: &[f64]) -> Result<VarianceWeights> {
    if s2.is_empty() {
        return Err(Error::Validation("no run variances given".into()));
    }
    if let Some((i, v)) = s2.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Validation(format!(
            "run variance {} is {v}; variances must be finite and non-negative",
            i + 1
        )));
    }
    let total: f64 = s2.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "every run has zero sample variance; the variance weights are undefined".into(),
        ));
    }
    Ok(VarianceWeights { rho2: s2.iter().map(|v| v / total).collect() })
}

/// Shared pieces of the location null distribution: the non-zero weights and
/// a χ²_{n−1} sampler. Zero-weight runs contribute nothing and are skipped.
struct Denominator {
    weights: Vec<f64>,
    chi: ChiSquareSampler,
    df: f64,
}

impl Denominator {
    fn new(weights: &VarianceWeights, replicates: usize) -> Result<Self> {
        if replicates < 2 {
            return Err(Error::Domain(format!("need n >= 2 replicates, got {replicates}")));
        }
        let df = (replicates - 1) as u64;
        Ok(Self {
            weights: weights.rho2.iter().copied().filter(|&w| w > 0.0).collect(),
            chi: ChiSquareSampler::new(df)?,
            df: df as f64,
        })
    }

    /// sqrt(Σ ρ_i² V_i / (n − 1)).
    #[inline]
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let s: f64 = self.weights.iter().map(|w| w * self.chi.sample(rng)).sum();
        (s / self.df).sqrt()
    }
}

fn ier_draws(weights: &VarianceWeights, replicates: usize, rng: RngState, samples: usize) -> Result<Vec<f64>> {
    let den = Denominator::new(weights, replicates)?;
    Ok(blocked(rng, samples, |r, out| {
        for v in out.iter_mut() {
            let u: f64 = r.sample(StandardNormal);
            *v = u / den.draw(r);
        }
    }))
}

/// Xᵀ diag(ρ²) X over the design's effect columns.
pub fn effect_covariance(weights: &VarianceWeights, design: &Design) -> Result<Vec<Vec<f64>>> {
    if weights.len() != design.runs() {
        return Err(Error::Validation(format!(
            "{} variance weights for a design with {} runs",
            weights.len(),
            design.runs()
        )));
    }
    let count = design.effect_count();
    let mut cov = vec![vec![0.0; count]; count];
    for (i, &w) in weights.rho2.iter().enumerate() {
        let row = design.row(i);
        for a in 0..count {
            let xa = f64::from(row[a]) * w;
            for b in 0..=a {
                cov[a][b] += xa * f64::from(row[b]);
            }
        }
    }
    for a in 0..count {
        for b in 0..a {
            cov[b][a] = cov[a][b];
        }
    }
    Ok(cov)
}

fn eer_draws(
    weights: &VarianceWeights,
    design: &Design,
    replicates: usize,
    rng: RngState,
    samples: usize,
) -> Result<Vec<f64>> {
    let factor = PsdFactor::new(&effect_covariance(weights, design)?)?;
    let den = Denominator::new(weights, replicates)?;
    Ok(blocked(rng, samples, |r, out| {
        let mut z = vec![0.0; factor.rank()];
        for v in out.iter_mut() {
            for zi in z.iter_mut() {
                *zi = r.sample(StandardNormal);
            }
            *v = factor.max_abs(&z) / den.draw(r);
        }
    }))
}

fn summarize(
    draws: Vec<f64>,
    p: f64,
    rng: RngState,
    alpha: f64,
    rate: ErrorRate,
) -> Result<McCriticalResult> {
    let samples = draws.len();
    let sample = EmpiricalSample::new(draws);
    Ok(McCriticalResult {
        critical: sample.quantile(p)?,
        samples,
        rng,
        alpha,
        error_rate: rate,
        quantile_se: sample.quantile_se(p)?,
    })
}

/// Upper (1 − α/2) quantile of the signed null t distribution.
pub fn mc_location_ier_critical(
    weights: &VarianceWeights,
    replicates: usize,
    alpha: f64,
    samples: usize,
    rng: RngState,
) -> Result<McCriticalResult> {
    check_alpha(alpha)?;
    check_mc_samples(samples)?;
    let draws = ier_draws(weights, replicates, rng, samples)?;
    summarize(draws, 1.0 - 0.5 * alpha, rng, alpha, ErrorRate::Ier)
}

/// Upper (1 − α) quantile of max_l |t_l| under the null.
pub fn mc_location_eer_critical(
    weights: &VarianceWeights,
    design: &Design,
    replicates: usize,
    alpha: f64,
    samples: usize,
    rng: RngState,
) -> Result<McCriticalResult> {
    check_alpha(alpha)?;
    check_mc_samples(samples)?;
    let draws = eer_draws(weights, design, replicates, rng, samples)?;
    summarize(draws, 1.0 - alpha, rng, alpha, ErrorRate::Eer)
}

/// Critical value only, by selection instead of a full sort. The simulation
/// harness calls this once per repetition.
pub(crate) fn mc_location_critical_fast(
    weights: &VarianceWeights,
    design: &Design,
    replicates: usize,
    alpha: f64,
    rate: ErrorRate,
    samples: usize,
    rng: RngState,
) -> Result<f64> {
    match rate {
        ErrorRate::Ier => {
            let mut d = ier_draws(weights, replicates, rng, samples)?;
            select_quantile(&mut d, 1.0 - 0.5 * alpha)
        }
        ErrorRate::Eer => {
            let mut d = eer_draws(weights, design, replicates, rng, samples)?;
            select_quantile(&mut d, 1.0 - alpha)
        }
    }
}

/// Var(log χ²_{n−1}) = trigamma((n − 1)/2).
pub fn exact_log_variance(replicates: usize) -> Result<f64> {
    check_replicates(replicates)?;
    trigamma(0.5 * (replicates as f64 - 1.0))
}

/// The usual large-sample approximation 2/(n − 1).
pub fn approx_log_variance(replicates: usize) -> Result<f64> {
    check_replicates(replicates)?;
    Ok(2.0 / (replicates as f64 - 1.0))
}

/// a_n = sqrt(trigamma((n − 1)/2) / (2/(n − 1))).
pub fn a_n(replicates: usize) -> Result<f64> {
    Ok((exact_log_variance(replicates)? / approx_log_variance(replicates)?).sqrt())
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < 2 {
        return Err(Error::Domain(format!("need n >= 2 replicates, got {replicates}")));
    }
    Ok(())
}

/// a_n · Φ⁻¹(1 − α/2).
pub fn disp_ier_critical(alpha: f64, replicates: usize) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(a_n(replicates)? * normal_upper_quantile(0.5 * alpha)?)
}

/// a_n · Φ⁻¹(0.5 + 0.5(1 − α)^{1/I}), evaluated through the upper tail
/// 0.5(1 − (1 − α)^{1/I}) to keep precision for large I.
pub fn disp_eer_critical(alpha: f64, replicates: usize, effects: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if effects == 0 {
        return Err(Error::Domain("need I >= 1 effects".into()));
    }
    let tail = if effects == 1 {
        0.5 * alpha
    } else {
        -0.5 * ((-alpha).ln_1p() / effects as f64).exp_m1()
    };
    Ok(a_n(replicates)? * normal_upper_quantile(tail)?)
}

pub fn mc_test(
    design: &Design,
    data: &ReplicatedData,
    model: Model,
    rate: ErrorRate,
    alpha: f64,
    rng: RngState,
    samples: usize,
) -> Result<TestReport> {
    check_shapes(design, data)?;
    check_alpha(alpha)?;
    let est = fit(design, data, model)?;
    let mut meta = ReportMeta {
        runs: data.runs(),
        replicates: data.replicates(),
        effects: est.len(),
        ..Default::default()
    };
    let (stats, critical) = match model {
        Model::Location => {
            let stats = wh_t_statistics(design, data)?;
            let weights = variance_weights(data.variances())?;
            let res = match rate {
                ErrorRate::Ier => mc_location_ier_critical(&weights, data.replicates(), alpha, samples, rng)?,
                ErrorRate::Eer => {
                    mc_location_eer_critical(&weights, design, data.replicates(), alpha, samples, rng)?
                }
            };
            meta.rng = Some(rng);
            meta.mc_samples = Some(samples);
            meta.quantile_se = Some(res.quantile_se);
            meta.notes.push("variance weights estimated from the observed data (s_i^2 / sum s_k^2)".into());
            (stats, res.critical)
        }
        Model::Dispersion => {
            let stats = z_from_gammas(&est.coefficients, data.runs(), data.replicates());
            let critical = match rate {
                ErrorRate::Ier => disp_ier_critical(alpha, data.replicates())?,
                ErrorRate::Eer => disp_eer_critical(alpha, data.replicates(), est.len())?,
            };
            meta.notes.push(format!("a_n = {:.6}", a_n(data.replicates())?));
            (stats, critical)
        }
    };
    Ok(TestReport::new(Method::Mc, rate, alpha, &est, &stats, critical, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::EffectSpec;

    #[test]
    fn weight_examples() {
        assert_eq!(variance_weights(&[1.0; 4]).unwrap().as_slice(), &[0.25; 4]);
        assert_eq!(variance_weights(&[3.0, 1.0]).unwrap().as_slice(), &[0.75, 0.25]);
        assert_eq!(
            variance_weights(&[0.0, 2.0, 2.0, 0.0]).unwrap().as_slice(),
            &[0.0, 0.5, 0.5, 0.0]
        );
        assert!(matches!(variance_weights(&[0.0; 3]), Err(Error::Degenerate(_))));
        assert!(matches!(variance_weights(&[1.0, -1.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn table_one_row() {
        let expected = [1.283, 1.184, 1.136, 1.107, 1.088, 1.075, 1.066, 1.058];
        for (n, e) in (3..=10).zip(expected) {
            assert!((a_n(n).unwrap() - e).abs() < 5e-4, "n={n}");
        }
        assert!((exact_log_variance(6).unwrap() - 0.490).abs() < 5e-4);
        assert!((approx_log_variance(6).unwrap() - 0.400).abs() < 1e-15);
        assert!(a_n(1).is_err());
    }

    #[test]
    fn dispersion_closed_forms() {
        // Reference values use a_n rounded to three decimals.
        assert!((disp_ier_critical(0.05, 3).unwrap() - 2.515).abs() < 2e-3);
        assert!((disp_ier_critical(0.05, 10).unwrap() - 2.074).abs() < 1e-3);
        // Φ⁻¹(0.5 + 0.5·0.95^{1/7}) = 2.682801, a_3 = π/√6.
        let expected = std::f64::consts::PI / 6f64.sqrt() * 2.682_801_454_749_324;
        assert!((disp_eer_critical(0.05, 3, 7).unwrap() - expected).abs() < 1e-8);
        for n in [2, 3, 7] {
            assert_eq!(disp_eer_critical(0.05, n, 1).unwrap(), disp_ier_critical(0.05, n).unwrap());
        }
        let c: Vec<f64> = (1..20).map(|i| disp_eer_critical(0.05, 4, i).unwrap()).collect();
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_weight_gives_t2() {
        let w = variance_weights(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = mc_location_ier_critical(&w, 3, 0.05, 200_000, RngState::from_seed(3)).unwrap();
        assert!((r.critical - 4.303).abs() < 0.1, "{}", r.critical);
    }

    #[test]
    fn covariance_is_identity_for_equal_weights() {
        let d = Design::full_factorial(&["A", "B", "C"], EffectSpec::Full).unwrap();
        let cov = effect_covariance(&VarianceWeights::homogeneous(8).unwrap(), &d).unwrap();
        for (a, row) in cov.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                assert!((v - if a == b { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn eer_dominates_ier() {
        let d = Design::full_factorial(&["A", "B", "C"], EffectSpec::Full).unwrap();
        let w = variance_weights(&[1.0, 2.0, 0.5, 3.0, 1.0, 1.0, 4.0, 0.2]).unwrap();
        let rng = RngState::from_seed(11);
        let ier = mc_location_ier_critical(&w, 3, 0.05, 20_000, rng).unwrap();
        let eer = mc_location_eer_critical(&w, &d, 3, 0.05, 20_000, rng).unwrap();
        assert!(eer.critical > ier.critical);
        let wide = mc_location_ier_critical(&w, 3, 0.5, 20_000, rng).unwrap();
        assert!(wide.critical < ier.critical);
    }
}
