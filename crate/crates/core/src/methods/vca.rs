//! Variyath–Chenouri–Abraham jackknife F tests (IER only).
//!
//! The log-variance measure uses the plain delete-one jackknife. The small-n
//! adjustment factor proposed for it in the original work is not applied.

use crate::data::{mean_var, ReplicatedData};
use crate::design::Design;
use crate::distributions::special::f1_critical;
use crate::effects::{check_shapes, fit, Model};
use crate::error::{Error, Result};
use crate::report::{check_alpha, ErrorRate, Method, ReportMeta, TestReport};

/// Per-run performance measure c(y_i).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Mean,
    LogVariance,
}

impl Measure {
    pub fn for_model(model: Model) -> Self {
        match model {
            Model::Location => Measure::Mean,
            Model::Dispersion => Measure::LogVariance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JackknifeResult {
    pub measure: Measure,
    pub per_run: Vec<f64>,
    pub pooled: f64,
}

/// (n−1)/n · Σ_j (c(y₍ⱼ₎) − c̄)², where y₍ⱼ₎ drops replicate j and c̄ is the
/// mean of the n leave-one-out measures.
pub fn jackknife_variance(row: &[f64], measure: Measure) -> Result<f64> {
    let n = row.len();
    let min = match measure {
        Measure::Mean => 2,
        Measure::LogVariance => 3,
    };
    if n < min {
        return Err(Error::Validation(format!(
            "jackknife of the {measure:?} measure needs at least {min} replicates, got {n}"
        )));
    }
    let mut loo = Vec::with_capacity(n);
    let mut sub = Vec::with_capacity(n - 1);
    for j in 0..n {
        sub.clear();
        sub.extend(row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v));
        let (mean, var) = mean_var(&sub);
        loo.push(match measure {
            Measure::Mean => mean,
            Measure::LogVariance => {
                if var <= 0.0 {
                    return Err(Error::Degenerate(format!(
                        "leave-one-out subsample without replicate {} has zero variance",
                        j + 1
                    )));
                }
                var.ln()
            }
        });
    }
    let nf = n as f64;
    let centre = loo.iter().sum::<f64>() / nf;
    let ss: f64 = loo.iter().map(|c| (c - centre) * (c - centre)).sum();
    Ok((nf - 1.0) / nf * ss)
}

pub fn jackknife(data: &ReplicatedData, measure: Measure) -> Result<JackknifeResult> {
    let per_run = data
        .rows()
        .enumerate()
        .map(|(i, row)| {
            jackknife_variance(row, measure).map_err(|e| match e {
                Error::Degenerate(msg) => Error::Degenerate(format!("run {}: {msg}", i + 1)),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pooled = per_run.iter().sum::<f64>() / per_run.len() as f64;
    Ok(JackknifeResult { measure, per_run, pooled })
}

/// F_l = m·θ̂_l² / V̂_pja with θ̂ the location or dispersion estimates.
pub fn vca_f_statistics(design: &Design, data: &ReplicatedData, model: Model) -> Result<Vec<f64>> {
    check_shapes(design, data)?;
    let est = fit(design, data, model)?;
    let jk = jackknife(data, Measure::for_model(model))?;
    f_from_estimates(&est.coefficients, data.runs(), jk.pooled)
}

pub(crate) fn f_from_estimates(coefficients: &[f64], runs: usize, pooled: f64) -> Result<Vec<f64>> {
    if pooled <= 0.0 {
        return Err(Error::Degenerate(
            "pooled jackknife variance is zero; the F statistics are undefined".into(),
        ));
    }
    let m = runs as f64;
    Ok(coefficients.iter().map(|c| m * c * c / pooled).collect())
}

/// Upper (1 − α) quantile of F(1, m(n − 1)).
pub fn vca_critical(alpha: f64, runs: usize, replicates: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if replicates < 2 {
        return Err(Error::Domain(format!("need n >= 2 replicates, got {replicates}")));
    }
    f1_critical(alpha, (runs * (replicates - 1)) as f64)
}

pub fn vca_test(
    design: &Design,
    data: &ReplicatedData,
    model: Model,
    rate: ErrorRate,
    alpha: f64,
) -> Result<TestReport> {
    Method::Vca.check_supports(rate)?;
    let est = fit(design, data, model)?;
    let stats = vca_f_statistics(design, data, model)?;
    let critical = vca_critical(alpha, data.runs(), data.replicates())?;
    let mut meta = ReportMeta {
        runs: data.runs(),
        replicates: data.replicates(),
        effects: est.len(),
        ..Default::default()
    };
    if model == Model::Dispersion {
        meta.notes.push("unadjusted jackknife variance of log s^2 (no small-n adjustment factor)".into());
    }
    Ok(TestReport::new(Method::Vca, rate, alpha, &est, &stats, critical, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::EffectSpec;

    #[test]
    fn mean_measure_examples() {
        let v = jackknife_variance(&[1.0, 2.0, 3.0], Measure::Mean).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jackknife_variance(&[4.0; 5], Measure::Mean).unwrap(), 0.0);
    }

    #[test]
    fn log_variance_brute_force() {
        // Deleted-subsample variances of (1, 2, 4): drop 1 → (2,4): 2,
        // drop 2 → (1,4): 4.5, drop 4 → (1,2): 0.5.
        let logs = [2f64.ln(), 4.5f64.ln(), 0.5f64.ln()];
        let centre = logs.iter().sum::<f64>() / 3.0;
        let expected = 2.0 / 3.0 * logs.iter().map(|c| (c - centre).powi(2)).sum::<f64>();
        let v = jackknife_variance(&[1.0, 2.0, 4.0], Measure::LogVariance).unwrap();
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn log_variance_errors() {
        assert!(matches!(
            jackknife_variance(&[1.0, 2.0], Measure::LogVariance),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            jackknife_variance(&[1.0, 1.0, 2.0], Measure::LogVariance),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn null_location_data_gives_zero_f() {
        let d = Design::full_factorial(&["A", "B", "C"], EffectSpec::Full).unwrap();
        let data = ReplicatedData::from_rows(&vec![vec![1.0, 2.0, 6.0]; 8]).unwrap();
        let f = vca_f_statistics(&d, &data, Model::Location).unwrap();
        assert!(f.iter().all(|&v| v.abs() < 1e-24));
    }

    #[test]
    fn eer_is_a_usage_error() {
        let d = Design::full_factorial(&["A", "B", "C"], EffectSpec::Full).unwrap();
        let data = ReplicatedData::from_rows(&vec![vec![1.0, 2.0, 6.0]; 8]).unwrap();
        assert!(matches!(
            vca_test(&d, &data, Model::Location, ErrorRate::Eer, 0.05),
            Err(Error::Usage(_))
        ));
    }
}
