//! Least-squares effect estimates and half-normal plot coordinates.

use crate::data::{join_indices, ReplicatedData};
use crate::design::Design;
use crate::distributions::special::normal_quantile;
use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Which model an analysis targets: the run means (location) or the log
/// run variances (dispersion).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Location,
    Dispersion,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Location => "location",
            Model::Dispersion => "dispersion",
        })
    }
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "location" | "loc" | "mean" => Ok(Model::Location),
            "dispersion" | "disp" | "variance" => Ok(Model::Dispersion),
            other => Err(Error::Validation(format!("unknown model {other:?} (location|dispersion)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectEstimates {
    pub model: Model,
    pub intercept: f64,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
}

impl EffectEstimates {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Regresses `z` on the design columns. With orthogonal ±1 columns the
/// solution is intercept = mean(z), coefficient_l = x_lᵀz / m.
pub fn estimate_effects(design: &Design, z: &[f64], model: Model) -> Result<EffectEstimates> {
    let m = design.runs();
    if z.len() != m {
        return Err(Error::Validation(format!(
            "response vector has {} entries but the design has {m} runs",
            z.len()
        )));
    }
    let bad: Vec<usize> = z
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_finite())
        .map(|(i, _)| i + 1)
        .collect();
    if !bad.is_empty() {
        return Err(match model {
            Model::Dispersion => Error::Degenerate(format!(
                "log-variance is not finite in run(s) {} (zero sample variance)",
                join_indices(&bad)
            )),
            Model::Location => Error::Validation(format!("non-finite response in run(s) {}", join_indices(&bad))),
        });
    }
    let mf = m as f64;
    let intercept = z.iter().sum::<f64>() / mf;
    let coefficients = (0..design.effect_count())
        .map(|l| {
            design
                .column(l)
                .zip(z)
                .map(|(x, &zi)| f64::from(x) * zi)
                .sum::<f64>()
                / mf
        })
        .collect();
    Ok(EffectEstimates {
        model,
        intercept,
        names: design.effect_names().to_vec(),
        coefficients,
    })
}

/// z₁ = ȳ for the location model, z₂ = log s² for the dispersion model.
pub fn model_response(data: &ReplicatedData, model: Model) -> Result<Vec<f64>> {
    match model {
        Model::Location => Ok(data.means().to_vec()),
        Model::Dispersion => data.log_variances(),
    }
}

pub fn fit(design: &Design, data: &ReplicatedData, model: Model) -> Result<EffectEstimates> {
    check_shapes(design, data)?;
    let z = model_response(data, model)?;
    estimate_effects(design, &z, model)
}

pub(crate) fn check_shapes(design: &Design, data: &ReplicatedData) -> Result<()> {
    if design.runs() != data.runs() {
        return Err(Error::Validation(format!(
            "design has {} runs but the responses have {}",
            design.runs(),
            data.runs()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfNormalPoint {
    pub effect: String,
    pub abs_estimate: f64,
    pub quantile: f64,
}

/// Points for a half-normal plot, ascending in |estimate|.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfNormalPoints {
    pub model: Model,
    pub points: Vec<HalfNormalPoint>,
}

/// Pairs the i-th smallest |estimate| with Φ⁻¹(0.5 + 0.5·(i − 0.5)/I). Ties
/// in |estimate| are broken by effect name.
pub fn half_normal_points(estimates: &EffectEstimates) -> Result<HalfNormalPoints> {
    let count = estimates.len();
    if count == 0 {
        return Err(Error::Validation("no effects to plot".into()));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| {
        estimates.coefficients[a]
            .abs()
            .total_cmp(&estimates.coefficients[b].abs())
            .then_with(|| estimates.names[a].cmp(&estimates.names[b]))
    });
    let points = order
        .into_iter()
        .enumerate()
        .map(|(rank, l)| {
            let p = 0.5 + 0.5 * (rank as f64 + 0.5) / count as f64;
            Ok(HalfNormalPoint {
                effect: estimates.names[l].clone(),
                abs_estimate: estimates.coefficients[l].abs(),
                quantile: normal_quantile(p)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(HalfNormalPoints { model: estimates.model, points })
}
