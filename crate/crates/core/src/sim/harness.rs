//! Repeated sampling from a scenario's models and tallying of rejections.
//!
//! Random streams are derived from the scenario seed: repetition r of design
//! case c with n replicates draws its data from stream `base(c, n) ^ r`, and
//! the per-repetition Monte Carlo critical value (our location method) from
//! the same stream with a high bit set. Results therefore do not depend on
//! how repetitions are scheduled across threads.

use super::scenario::{DesignCase, Scenario};
use super::table::{Cell, ErrorRateTable};
use crate::data::ReplicatedData;
use crate::distributions::RngState;
use crate::effects::{fit, Model};
use crate::error::{Error, Result};
use crate::methods::lenth::{lenth_critical, lenth_pse};
use crate::methods::mc::{disp_eer_critical, disp_ier_critical, mc_location_critical_fast, variance_weights};
use crate::methods::vca::{f_from_estimates, jackknife, vca_critical, Measure};
use crate::methods::wh::{wh_dispersion_critical, wh_location_critical, wh_t_statistics, z_from_gammas};
use crate::report::{ErrorRate, Method};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::collections::HashMap;

/// Redraws allowed for a single repetition before giving up.
const MAX_ATTEMPTS: u64 = 64;
const INNER_IER_BIT: u64 = 1 << 63;
const INNER_EER_BIT: u64 = 1 << 62;
const CRITICAL_BIT: u64 = 1 << 61;

fn base_stream(case: usize, replicates: usize) -> u64 {
    ((case as u64) << 48) | ((replicates as u64 & 0xff) << 40)
}

/// Stream for the data of one repetition; `attempt` > 0 after degenerate draws.
pub fn repetition_rng(seed: u64, case: usize, replicates: usize, rep: usize, attempt: u64) -> RngState {
    RngState::new(seed, base_stream(case, replicates) ^ rep as u64 ^ (attempt << 32))
}

/// y_ij = μ_i + σ_i Z_ij with μ_i and log σ_i² from the case's models.
pub fn generate_dataset(case: &DesignCase, replicates: usize, rng: RngState) -> Result<ReplicatedData> {
    let mut r = rng.rng();
    let m = case.design.runs();
    let mut y = Vec::with_capacity(m * replicates);
    for i in 0..m {
        let levels = case.design.factor_levels(i);
        let mu = case.location.eval(levels);
        let sigma = (0.5 * case.dispersion.eval(levels)).exp();
        for _ in 0..replicates {
            let z: f64 = r.sample(StandardNormal);
            y.push(mu + sigma * z);
        }
    }
    ReplicatedData::from_flat(m, replicates, y)
}

/// Critical value known before seeing data, or recomputed per repetition.
#[derive(Debug, Clone, Copy)]
enum Critical {
    Fixed(f64),
    PerRepetition,
}

struct Combo {
    method: Method,
    rate: ErrorRate,
    critical: Critical,
}

struct Prepared<'a> {
    scenario: &'a Scenario,
    case: &'a DesignCase,
    replicates: usize,
    combos: Vec<Combo>,
}

type LenthCache = HashMap<(usize, ErrorRate), f64>;

fn prepare<'a>(
    scenario: &'a Scenario,
    case_index: usize,
    replicates: usize,
    lenth_cache: &mut LenthCache,
) -> Result<Prepared<'a>> {
    let case = &scenario.cases[case_index];
    let m = case.design.runs();
    let effects = case.design.effect_count();
    let alpha = scenario.alpha;
    let crit_rng = |tag: u64| RngState::new(scenario.seed, CRITICAL_BIT | base_stream(case_index, replicates) | tag);
    let mut combos = Vec::new();
    for &rate in &scenario.error_rates {
        let rate_tag = match rate {
            ErrorRate::Ier => 0,
            ErrorRate::Eer => 1,
        };
        for &method in &scenario.methods {
            let critical = match (method, scenario.model) {
                (Method::Mc, Model::Location) => Critical::PerRepetition,
                (Method::Mc, Model::Dispersion) => Critical::Fixed(match rate {
                    ErrorRate::Ier => disp_ier_critical(alpha, replicates)?,
                    ErrorRate::Eer => disp_eer_critical(alpha, replicates, effects)?,
                }),
                (Method::Wh, Model::Location) => Critical::Fixed(wh_location_critical(
                    alpha,
                    m,
                    replicates,
                    effects,
                    rate,
                    crit_rng(2 + rate_tag),
                    scenario.smm_samples,
                )?),
                (Method::Wh, Model::Dispersion) => Critical::Fixed(wh_dispersion_critical(
                    alpha,
                    effects,
                    rate,
                    crit_rng(2 + rate_tag),
                    scenario.smm_samples,
                )?),
                (Method::Vca, _) => Critical::Fixed(vca_critical(alpha, m, replicates)?),
                (Method::Lenth, _) => {
                    // Depends on I only, so shared across designs and n.
                    let key = (effects, rate);
                    let value = match lenth_cache.get(&key) {
                        Some(&v) => v,
                        None => {
                            let stream = CRITICAL_BIT | ((effects as u64) << 8) | (4 + rate_tag);
                            let v = lenth_critical(
                                alpha,
                                effects,
                                rate,
                                RngState::new(scenario.seed, stream),
                                scenario.lenth_samples,
                            )?
                            .critical;
                            lenth_cache.insert(key, v);
                            v
                        }
                    };
                    Critical::Fixed(value)
                }
            };
            combos.push(Combo { method, rate, critical });
        }
    }
    Ok(Prepared { scenario, case, replicates, combos })
}

impl Prepared<'_> {
    fn slots(&self) -> usize {
        let effects = self.case.design.effect_count();
        self.combos
            .iter()
            .map(|c| match c.rate {
                ErrorRate::Ier => effects,
                ErrorRate::Eer => 1,
            })
            .sum()
    }

    fn statistics(&self, method: Method, data: &ReplicatedData) -> Result<Vec<f64>> {
        let design = &self.case.design;
        let model = self.scenario.model;
        match (method, model) {
            (Method::Mc | Method::Wh, Model::Location) => wh_t_statistics(design, data),
            (Method::Mc | Method::Wh, Model::Dispersion) => {
                let est = fit(design, data, model)?;
                Ok(z_from_gammas(&est.coefficients, data.runs(), data.replicates()))
            }
            (Method::Vca, _) => {
                let est = fit(design, data, model)?;
                let jk = jackknife(data, Measure::for_model(model))?;
                f_from_estimates(&est.coefficients, data.runs(), jk.pooled)
            }
            (Method::Lenth, _) => {
                let est = fit(design, data, model)?;
                Ok(lenth_pse(&est.coefficients)?.t)
            }
        }
    }

    /// Rejection indicators for every slot, from one dataset.
    fn evaluate(&self, data: &ReplicatedData, stream: RngState, out: &mut [u32]) -> Result<()> {
        let design = &self.case.design;
        let mut pos = 0;
        for combo in &self.combos {
            let stats = self.statistics(combo.method, data)?;
            let critical = match combo.critical {
                Critical::Fixed(c) => c,
                Critical::PerRepetition => {
                    let weights = variance_weights(data.variances())?;
                    let bit = match combo.rate {
                        ErrorRate::Ier => INNER_IER_BIT,
                        ErrorRate::Eer => INNER_EER_BIT,
                    };
                    mc_location_critical_fast(
                        &weights,
                        design,
                        self.replicates,
                        self.scenario.alpha,
                        combo.rate,
                        self.scenario.inner_mc,
                        RngState::new(stream.seed, stream.stream ^ bit),
                    )?
                }
            };
            match combo.rate {
                ErrorRate::Ier => {
                    for (slot, s) in out[pos..pos + stats.len()].iter_mut().zip(&stats) {
                        *slot = u32::from(s.abs() > critical);
                    }
                    pos += stats.len();
                }
                ErrorRate::Eer => {
                    out[pos] = u32::from(stats.iter().any(|s| s.abs() > critical));
                    pos += 1;
                }
            }
        }
        Ok(())
    }

    /// One repetition, redrawing degenerate datasets. Returns the number of
    /// redraws.
    fn repetition(&self, case_index: usize, rep: usize, out: &mut [u32]) -> Result<u64> {
        for attempt in 0..MAX_ATTEMPTS {
            let stream = repetition_rng(self.scenario.seed, case_index, self.replicates, rep, attempt);
            let data = generate_dataset(self.case, self.replicates, stream)?;
            match self.evaluate(&data, stream, out) {
                Ok(()) => return Ok(attempt),
                Err(Error::Degenerate(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Degenerate(format!(
            "design {} n={}: repetition {rep} stayed degenerate after {MAX_ATTEMPTS} redraws",
            self.case.name, self.replicates
        )))
    }
}

/// Rejection percentages for every (design, error rate, row, method, n).
pub fn estimate_error_rates(scenario: &Scenario) -> Result<ErrorRateTable> {
    scenario.validate()?;
    let mut lenth_cache = LenthCache::new();
    let mut cells = Vec::new();
    let reps = scenario.repetitions;
    for case_index in 0..scenario.cases.len() {
        for &n in &scenario.replicates {
            let prepared = prepare(scenario, case_index, n, &mut lenth_cache)?;
            let slots = prepared.slots();
            let (counts, degenerate) = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let mut flags = vec![0u32; slots];
                    let redraws = prepared.repetition(case_index, rep, &mut flags)?;
                    Ok::<_, Error>((flags, redraws))
                })
                .try_reduce(
                    || (vec![0u32; slots], 0u64),
                    |(mut a, da), (b, db)| {
                        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                        Ok((a, da + db))
                    },
                )?;
            if degenerate * 100 > reps as u64 {
                return Err(Error::Degenerate(format!(
                    "design {} n={n}: {degenerate} degenerate datasets in {reps} repetitions exceeds 1%",
                    prepared.case.name
                )));
            }
            push_cells(&prepared, &counts, degenerate, &mut cells);
        }
    }
    // Order cells by rate, design, row, method and n for stable output.
    let case_pos = |name: &str| scenario.cases.iter().position(|c| c.name == name).unwrap_or(0);
    let method_pos = |m: Method| scenario.methods.iter().position(|&x| x == m).unwrap_or(0);
    let rate_pos = |r: ErrorRate| scenario.error_rates.iter().position(|&x| x == r).unwrap_or(0);
    let n_pos = |n: usize| scenario.replicates.iter().position(|&x| x == n).unwrap_or(0);
    let row_pos = |c: &Cell| {
        scenario.cases[case_pos(&c.case)]
            .design
            .effect_index(&c.row)
            .unwrap_or(0)
    };
    cells.sort_by_key(|c| (rate_pos(c.error_rate), case_pos(&c.case), row_pos(c), method_pos(c.method), n_pos(c.replicates)));
    Ok(ErrorRateTable {
        title: scenario.title.clone(),
        model: scenario.model,
        alpha: scenario.alpha,
        cells,
    })
}

fn push_cells(p: &Prepared, counts: &[u32], degenerate: u64, cells: &mut Vec<Cell>) {
    let design = &p.case.design;
    let model = p.scenario.model;
    let reps = p.scenario.repetitions as u64;
    let mut pos = 0;
    for combo in &p.combos {
        let cell = |row: String, null: bool, rejections: u32| Cell {
            case: p.case.name.clone(),
            error_rate: combo.rate,
            row,
            null,
            method: combo.method,
            replicates: p.replicates,
            rejections: u64::from(rejections),
            repetitions: reps,
            degenerate,
        };
        match combo.rate {
            ErrorRate::Ier => {
                for l in 0..design.effect_count() {
                    cells.push(cell(design.effect_names()[l].clone(), p.case.is_null(model, l), counts[pos + l]));
                }
                pos += design.effect_count();
            }
            ErrorRate::Eer => {
                cells.push(cell(format!("I={}", design.effect_count()), true, counts[pos]));
                pos += 1;
            }
        }
    }
}
