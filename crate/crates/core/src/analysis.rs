//! One entry point that dispatches a dataset to any method.

use crate::data::ReplicatedData;
use crate::design::Design;
use crate::distributions::RngState;
use crate::effects::Model;
use crate::error::Result;
use crate::methods::{lenth_test, mc_test, vca_test, wh_test, DEFAULT_LENTH_SAMPLES, DEFAULT_MC_SAMPLES, DEFAULT_SMM_SAMPLES};
use crate::report::{ErrorRate, Method, TestReport};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub model: Model,
    pub method: Method,
    pub error_rate: ErrorRate,
    pub alpha: f64,
    /// Monte Carlo size; `None` picks the method's default.
    pub mc_samples: Option<usize>,
    pub seed: u64,
}

impl AnalysisConfig {
    pub fn new(model: Model, method: Method) -> Self {
        Self {
            model,
            method,
            error_rate: ErrorRate::Ier,
            alpha: DEFAULT_ALPHA,
            mc_samples: None,
            seed: DEFAULT_SEED,
        }
    }

    pub fn samples(&self) -> usize {
        self.mc_samples.unwrap_or(match self.method {
            Method::Wh => DEFAULT_SMM_SAMPLES,
            Method::Lenth => DEFAULT_LENTH_SAMPLES,
            Method::Mc | Method::Vca => DEFAULT_MC_SAMPLES,
        })
    }
}

pub fn analyze(design: &Design, data: &ReplicatedData, config: &AnalysisConfig) -> Result<TestReport> {
    config.method.check_supports(config.error_rate)?;
    let rng = RngState::from_seed(config.seed);
    let samples = config.samples();
    let (model, rate, alpha) = (config.model, config.error_rate, config.alpha);
    match config.method {
        Method::Mc => mc_test(design, data, model, rate, alpha, rng, samples),
        Method::Wh => wh_test(design, data, model, rate, alpha, rng, samples),
        Method::Vca => vca_test(design, data, model, rate, alpha),
        Method::Lenth => lenth_test(design, data, model, rate, alpha, rng, samples),
    }
}
