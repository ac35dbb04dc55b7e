//! Test reports shared by every method.

use crate::distributions::RngState;
use crate::effects::{EffectEstimates, Model};
use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Individual (per-effect) or experimentwise error rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorRate {
    Ier,
    Eer,
}

impl fmt::Display for ErrorRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorRate::Ier => "ier",
            ErrorRate::Eer => "eer",
        })
    }
}

impl FromStr for ErrorRate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ier" => Ok(ErrorRate::Ier),
            "eer" => Ok(ErrorRate::Eer),
            other => Err(Error::Validation(format!("unknown error rate {other:?} (ier|eer)"))),
        }
    }
}

/// Testing procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Monte Carlo critical values (location) and exact-variance critical
    /// values (dispersion).
    Mc,
    /// Wu–Hamada t/z statistics with t, normal and SMM cutoffs.
    Wh,
    /// Variyath–Chenouri–Abraham jackknife F test.
    Vca,
    /// Lenth's pseudo-standard-error test.
    Lenth,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mc, Method::Wh, Method::Vca, Method::Lenth];

    pub fn label(self) -> &'static str {
        match self {
            Method::Mc => "Our method",
            Method::Wh => "WH method",
            Method::Vca => "VCA method",
            Method::Lenth => "Lenth's method",
        }
    }

    pub fn supports(self, rate: ErrorRate) -> bool {
        !(self == Method::Vca && rate == ErrorRate::Eer)
    }

    pub fn check_supports(self, rate: ErrorRate) -> Result<()> {
        if self.supports(rate) {
            Ok(())
        } else {
            Err(Error::Usage(
                "the VCA jackknife method has no procedure for the experimentwise error rate; \
                 use --error-rate ier or another method"
                    .into(),
            ))
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mc => "mc",
            Method::Wh => "wh",
            Method::Vca => "vca",
            Method::Lenth => "lenth",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" | "our" | "ours" => Ok(Method::Mc),
            "wh" => Ok(Method::Wh),
            "vca" => Ok(Method::Vca),
            "lenth" => Ok(Method::Lenth),
            other => Err(Error::Validation(format!("unknown method {other:?} (mc|wh|vca|lenth)"))),
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectTest {
    pub effect: String,
    pub estimate: f64,
    pub statistic: f64,
    pub critical: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportMeta {
    pub runs: usize,
    pub replicates: usize,
    pub effects: usize,
    /// Present when a Monte Carlo critical value was used.
    pub rng: Option<RngState>,
    pub mc_samples: Option<usize>,
    pub quantile_se: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub model: Model,
    pub method: Method,
    pub error_rate: ErrorRate,
    pub alpha: f64,
    pub critical: f64,
    pub rows: Vec<EffectTest>,
    pub meta: ReportMeta,
}

impl TestReport {
    /// Assembles a report; an effect is significant iff |statistic| > critical.
    pub fn new(
        method: Method,
        error_rate: ErrorRate,
        alpha: f64,
        estimates: &EffectEstimates,
        statistics: &[f64],
        critical: f64,
        meta: ReportMeta,
    ) -> Self {
        let rows = estimates
            .names
            .iter()
            .zip(&estimates.coefficients)
            .zip(statistics)
            .map(|((name, &estimate), &statistic)| EffectTest {
                effect: name.clone(),
                estimate,
                statistic,
                critical,
                significant: statistic.abs() > critical,
            })
            .collect();
        Self {
            model: estimates.model,
            method,
            error_rate,
            alpha,
            critical,
            rows,
            meta,
        }
    }

    pub fn significant_effects(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.significant)
            .map(|r| r.effect.as_str())
            .collect()
    }
}
