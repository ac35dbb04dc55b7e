//! Lenth's pseudo-standard-error test, applied to either model's estimates.
//!
//! Critical values come from simulating the null distribution: I iid N(0,1)
//! estimates are turned into t_Lenth values. IER pools |t| over all I
//! coordinates; EER uses max_l |t_l|.

use super::McCriticalResult;
use crate::data::ReplicatedData;
use crate::design::Design;
use crate::distributions::sampling::{blocked_rows, check_mc_samples, EmpiricalSample};
use crate::distributions::RngState;
use crate::effects::{fit, Model};
use crate::error::{Error, Result};
use crate::report::{check_alpha, ErrorRate, Method, ReportMeta, TestReport};
use rand::Rng;
use rand_distr::StandardNormal;

pub const DEFAULT_LENTH_SAMPLES: usize = 100_000;

/// Multiplier turning a median absolute estimate into a scale estimate.
const MEDIAN_SCALE: f64 = 1.5;
/// Estimates with |θ̂| ≥ 2.5·s0 are excluded from the PSE median.
const TRIM_FACTOR: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PseResult {
    pub s0: f64,
    pub pse: f64,
    pub retained: usize,
    pub t: Vec<f64>,
}

/// Median with the mean of the two central values for even counts.
/// Sorts `values` in place.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn lenth_pse(estimates: &[f64]) -> Result<PseResult> {
    if estimates.len() < 2 {
        return Err(Error::Validation(format!(
            "Lenth's method needs at least 2 effects, got {}",
            estimates.len()
        )));
    }
    let mut abs: Vec<f64> = estimates.iter().map(|e| e.abs()).collect();
    let s0 = MEDIAN_SCALE * median(&mut abs);
    let mut kept: Vec<f64> = abs.into_iter().filter(|&a| a < TRIM_FACTOR * s0).collect();
    if kept.is_empty() {
        return Err(Error::Degenerate(
            "no effect satisfies |estimate| < 2.5*s0 (s0 = 0); the PSE is undefined".into(),
        ));
    }
    let retained = kept.len();
    let pse = MEDIAN_SCALE * median(&mut kept);
    if pse <= 0.0 {
        return Err(Error::Degenerate("pseudo standard error is zero".into()));
    }
    let t = estimates.iter().map(|e| e / pse).collect();
    Ok(PseResult { s0, pse, retained, t })
}

/// t_Lenth for I fresh iid N(0,1) estimates. Redraws in the (probability
/// zero) event of a zero PSE.
fn null_draw<R: Rng>(rng: &mut R, est: &mut [f64], out: &mut [f64]) {
    loop {
        for e in est.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        if let Ok(res) = lenth_pse(est) {
            out.copy_from_slice(&res.t);
            return;
        }
    }
}

/// Monte Carlo critical value for |t_Lenth| under the null.
pub fn lenth_critical(
    alpha: f64,
    effects: usize,
    rate: ErrorRate,
    rng: RngState,
    samples: usize,
) -> Result<McCriticalResult> {
    check_alpha(alpha)?;
    check_mc_samples(samples)?;
    if effects < 2 {
        return Err(Error::Validation(format!("Lenth's method needs I >= 2, got {effects}")));
    }
    let values = match rate {
        ErrorRate::Ier => blocked_rows(rng, samples, effects, |r, chunk| {
            let mut est = vec![0.0; effects];
            for row in chunk.chunks_exact_mut(effects) {
                null_draw(r, &mut est, row);
                for v in row.iter_mut() {
                    *v = v.abs();
                }
            }
        }),
        ErrorRate::Eer => blocked_rows(rng, samples, 1, |r, chunk| {
            let mut est = vec![0.0; effects];
            let mut t = vec![0.0; effects];
            for v in chunk.iter_mut() {
                null_draw(r, &mut est, &mut t);
                *v = t.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            }
        }),
    };
    let sample = EmpiricalSample::new(values);
    let p = 1.0 - alpha;
    Ok(McCriticalResult {
        critical: sample.quantile(p)?,
        samples,
        rng,
        alpha,
        error_rate: rate,
        quantile_se: sample.quantile_se(p)?,
    })
}

/// Report from precomputed critical value; used by the simulation harness to
/// avoid re-simulating the data-independent cutoff.
pub(crate) fn lenth_report(
    design: &Design,
    data: &ReplicatedData,
    model: Model,
    critical: &McCriticalResult,
) -> Result<TestReport> {
    let est = fit(design, data, model)?;
    let pse = lenth_pse(&est.coefficients)?;
    let meta = ReportMeta {
        runs: data.runs(),
        replicates: data.replicates(),
        effects: est.len(),
        rng: Some(critical.rng),
        mc_samples: Some(critical.samples),
        quantile_se: Some(critical.quantile_se),
        notes: vec![format!("PSE = {:.6}, s0 = {:.6}, retained = {}", pse.pse, pse.s0, pse.retained)],
    };
    Ok(TestReport::new(
        Method::Lenth,
        critical.error_rate,
        critical.alpha,
        &est,
        &pse.t,
        critical.critical,
        meta,
    ))
}

pub fn lenth_test(
    design: &Design,
    data: &ReplicatedData,
    model: Model,
    rate: ErrorRate,
    alpha: f64,
    rng: RngState,
    samples: usize,
) -> Result<TestReport> {
    crate::effects::check_shapes(design, data)?;
    let critical = lenth_critical(alpha, design.effect_count(), rate, rng, samples)?;
    lenth_report(design, data, model, &critical)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_magnitudes() {
        let est = [2.0, -2.0, 2.0, 2.0, -2.0];
        let r = lenth_pse(&est).unwrap();
        assert_eq!(r.s0, 3.0);
        assert_eq!(r.retained, 5);
        assert_eq!(r.pse, 3.0);
        for (t, e) in r.t.iter().zip(est) {
            assert!((t - e.signum() / 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sparse_estimates_are_degenerate() {
        let r = lenth_pse(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10.0]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn one_through_seven() {
        let est: Vec<f64> = (1..=7).map(f64::from).collect();
        let r = lenth_pse(&est).unwrap();
        assert_eq!(r.s0, 6.0);
        assert_eq!(r.retained, 7);
        assert_eq!(r.pse, 6.0);
        assert!((r.t[6] - 7.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn trimming_is_strict() {
        // median |est| = 2 → s0 = 3, cutoff 7.5; the 7.5 is excluded.
        let r = lenth_pse(&[1.0, -1.0, 2.0, 7.5, 8.0]).unwrap();
        assert_eq!(r.retained, 3);
        assert_eq!(r.pse, 1.5);
    }

    #[test]
    fn even_median() {
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&mut [5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn needs_two_effects() {
        assert!(matches!(lenth_pse(&[1.0]), Err(Error::Validation(_))));
        assert!(lenth_critical(0.05, 1, ErrorRate::Ier, RngState::from_seed(1), 20_000).is_err());
    }
}
