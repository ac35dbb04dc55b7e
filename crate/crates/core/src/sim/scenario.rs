//! Scenario files.
//!
//! ```text
//! # comment
//! title        = Homogeneous location model
//! model        = location          # or dispersion
//! error_rate   = ier               # ier, eer or "ier, eer"
//! alpha        = 0.05
//! replicates   = 3, 4, 5, 6
//! repetitions  = 4000
//! seed         = 2
//! inner_mc     = 20000             # per-repetition MC size (our location method)
//! methods      = mc, wh, vca, lenth
//!
//! [design 2^3]
//! factors    = A, B, C
//! effects    = full                # or "order 2", or a list "A, B, AB"
//! location   = 10 + 0.5A + 0.5B + 0.4AB
//! dispersion = A + C + 0.5AC       # log variance
//! ```
//!
//! Expressions are sums of terms `[coef][*]EFFECT` or constants; an omitted
//! coefficient is 1. With multi-character factor names write effects as
//! `temp:speed`. A number directly followed by `e`/`E` and a digit is read
//! as an exponent, so write `0.5*E+1` rather than `0.5E+1` for a factor E.

use crate::design::{parse_effect, Design, EffectSpec};
use crate::effects::Model;
use crate::error::{Error, Result};
use crate::methods::{DEFAULT_LENTH_SAMPLES, DEFAULT_SMM_SAMPLES};
use crate::report::{ErrorRate, Method};

pub const DEFAULT_REPETITIONS: usize = 4_000;
pub const DEFAULT_INNER_MC: usize = 20_000;
pub const MIN_REPETITIONS: usize = 100;

/// α₀ + Σ coef · x_effect, over effects given as sorted factor indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearModel {
    pub intercept: f64,
    pub terms: Vec<(Vec<usize>, f64)>,
}

impl LinearModel {
    /// Value at one run's factor levels.
    pub fn eval(&self, levels: &[i8]) -> f64 {
        self.intercept
            + self
                .terms
                .iter()
                .map(|(factors, c)| c * f64::from(factors.iter().map(|&f| levels[f]).product::<i8>()))
                .sum::<f64>()
    }

    /// Coefficient of an effect, 0 if absent.
    pub fn coefficient(&self, factors: &[usize]) -> f64 {
        self.terms
            .iter()
            .filter(|(f, _)| f == factors)
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(_, c)| *c == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignCase {
    pub name: String,
    pub design: Design,
    pub location: LinearModel,
    /// Model for log σ².
    pub dispersion: LinearModel,
}

impl DesignCase {
    pub fn model(&self, model: Model) -> &LinearModel {
        match model {
            Model::Location => &self.location,
            Model::Dispersion => &self.dispersion,
        }
    }

    /// True when effect `l` has a zero coefficient in the tested model.
    pub fn is_null(&self, model: Model, l: usize) -> bool {
        self.model(model).coefficient(self.design.effect_factors(l)) == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub title: String,
    pub model: Model,
    pub error_rates: Vec<ErrorRate>,
    pub alpha: f64,
    pub replicates: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub inner_mc: usize,
    pub lenth_samples: usize,
    pub smm_samples: usize,
    pub methods: Vec<Method>,
    pub cases: Vec<DesignCase>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::Validation("scenario has no [design] section".into()));
        }
        if self.repetitions < MIN_REPETITIONS {
            return Err(Error::Validation(format!(
                "repetitions must be at least {MIN_REPETITIONS}, got {}",
                self.repetitions
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Validation(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.replicates.is_empty() || self.replicates.iter().any(|&n| n < 2) {
            return Err(Error::Validation("replicates must list values >= 2".into()));
        }
        if self.methods.is_empty() || self.error_rates.is_empty() {
            return Err(Error::Validation("methods and error_rate must not be empty".into()));
        }
        for &m in &self.methods {
            for &r in &self.error_rates {
                m.check_supports(r)?;
            }
        }
        if self.model == Model::Dispersion
            && self.methods.contains(&Method::Vca)
            && self.replicates.iter().any(|&n| n < 3)
        {
            return Err(Error::Validation(
                "the VCA dispersion test needs n >= 3 replicates (jackknife of log s^2)".into(),
            ));
        }
        for case in &self.cases {
            for i in 0..case.design.runs() {
                let levels = case.design.factor_levels(i);
                let var = case.dispersion.eval(levels).exp();
                if !(var.is_finite() && var > 0.0) || !case.location.eval(levels).is_finite() {
                    return Err(Error::Validation(format!(
                        "design {}: run {} has mean {} and variance {var}",
                        case.name,
                        i + 1,
                        case.location.eval(levels)
                    )));
                }
            }
            if self.error_rates.contains(&ErrorRate::Eer) && !case.model(self.model).is_constant() {
                return Err(Error::Validation(format!(
                    "design {}: EER studies need every {} effect to be null",
                    case.name, self.model
                )));
            }
        }
        Ok(())
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses `[coef][*]EFFECT` terms joined by + and −.
pub fn parse_linear(text: &str, factor_names: &[String], line: usize) -> Result<LinearModel> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut model = LinearModel::default();
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    let mut first = true;
    loop {
        skip_ws(&mut pos);
        if pos >= chars.len() {
            if first {
                return Err(perr(line, "empty expression"));
            }
            break;
        }
        let mut sign = 1.0;
        match chars[pos] {
            '+' => pos += 1,
            '-' => {
                sign = -1.0;
                pos += 1
            }
            _ if !first => return Err(perr(line, format!("expected + or - in {text:?}"))),
            _ => {}
        }
        first = false;
        skip_ws(&mut pos);
        let start = pos;
        while pos < chars.len() && (chars[pos].is_ascii_digit() || chars[pos] == '.') {
            pos += 1;
        }
        if pos > start
            && pos + 1 < chars.len()
            && matches!(chars[pos], 'e' | 'E')
            && (chars[pos + 1].is_ascii_digit()
                || (matches!(chars[pos + 1], '+' | '-') && chars.get(pos + 2).is_some_and(char::is_ascii_digit)))
        {
            pos += 2;
            while pos < chars.len() && chars[pos].is_ascii_digit() {
                pos += 1;
            }
        }
        let number: String = chars[start..pos].iter().collect();
        let coef = if number.is_empty() {
            None
        } else {
            Some(number.parse::<f64>().map_err(|_| perr(line, format!("bad number {number:?}")))?)
        };
        skip_ws(&mut pos);
        if pos < chars.len() && chars[pos] == '*' {
            pos += 1;
            skip_ws(&mut pos);
        }
        let id_start = pos;
        while pos < chars.len() && (chars[pos].is_alphanumeric() || chars[pos] == '_' || chars[pos] == ':') {
            pos += 1;
        }
        let ident: String = chars[id_start..pos].iter().collect();
        match (coef, ident.is_empty()) {
            (None, true) => return Err(perr(line, format!("expected a term in {text:?}"))),
            (Some(c), true) => model.intercept += sign * c,
            (c, false) => {
                let factors = parse_effect(&ident, factor_names).map_err(|e| perr(line, e.to_string()))?;
                model.terms.push((factors, sign * c.unwrap_or(1.0)));
            }
        }
    }
    Ok(model)
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str, line: usize) -> Result<T> {
    value
        .trim()
        .replace('_', "")
        .parse()
        .map_err(|_| perr(line, format!("{key}: cannot parse {value:?}")))
}

#[derive(Default)]
struct PendingCase {
    name: String,
    line: usize,
    factors: Option<Vec<String>>,
    effects: Option<(String, usize)>,
    location: Option<(String, usize)>,
    dispersion: Option<(String, usize)>,
}

impl PendingCase {
    fn finish(self) -> Result<DesignCase> {
        let factors = self
            .factors
            .ok_or_else(|| perr(self.line, format!("design {} has no factors line", self.name)))?;
        let spec = match &self.effects {
            None => EffectSpec::Full,
            Some((v, line)) => {
                let v = v.trim();
                if v.eq_ignore_ascii_case("full") {
                    EffectSpec::Full
                } else if let Some(order) = v.strip_prefix("order") {
                    EffectSpec::UpToOrder(parse_num(order, "effects", *line)?)
                } else {
                    EffectSpec::List(parse_list(v))
                }
            }
        };
        let design = Design::full_factorial(&factors, spec).map_err(|e| perr(self.line, e.to_string()))?;
        let names = design.factor_names().to_vec();
        let parse = |field: &Option<(String, usize)>| -> Result<LinearModel> {
            match field {
                None => Ok(LinearModel::default()),
                Some((text, line)) => {
                    let m = parse_linear(text, &names, *line)?;
                    for (f, _) in &m.terms {
                        if !(0..design.effect_count()).any(|l| design.effect_factors(l) == f.as_slice()) {
                            return Err(perr(*line, format!("effect in {text:?} is not among the design's effects")));
                        }
                    }
                    Ok(m)
                }
            }
        };
        Ok(DesignCase {
            location: parse(&self.location)?,
            dispersion: parse(&self.dispersion)?,
            name: self.name,
            design,
        })
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut title = String::new();
    let mut model = None;
    let mut error_rates = vec![ErrorRate::Ier];
    let mut alpha = 0.05;
    let mut replicates = None;
    let mut repetitions = DEFAULT_REPETITIONS;
    let mut seed = 1u64;
    let mut inner_mc = DEFAULT_INNER_MC;
    let mut lenth_samples = DEFAULT_LENTH_SAMPLES;
    let mut smm_samples = DEFAULT_SMM_SAMPLES;
    let mut methods = None;
    let mut cases = Vec::new();
    let mut current: Option<PendingCase> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| perr(line, "section header must end with ']'"))?
                .trim();
            let name = header
                .strip_prefix("design")
                .ok_or_else(|| perr(line, format!("unknown section [{header}]")))?
                .trim();
            if let Some(done) = current.take() {
                cases.push(done.finish()?);
            }
            current = Some(PendingCase {
                name: if name.is_empty() { format!("design{}", cases.len() + 1) } else { name.to_string() },
                line,
                ..Default::default()
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| perr(line, format!("expected key = value, got {content:?}")))?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        if let Some(case) = current.as_mut() {
            match key.as_str() {
                "factors" => case.factors = Some(parse_list(value)),
                "effects" => case.effects = Some((value.to_string(), line)),
                "location" => case.location = Some((value.to_string(), line)),
                "dispersion" => case.dispersion = Some((value.to_string(), line)),
                other => return Err(perr(line, format!("unknown design key {other:?}"))),
            }
            continue;
        }
        let wrap = |e: Error| perr(line, e.to_string());
        match key.as_str() {
            "title" => title = value.to_string(),
            "model" => model = Some(value.parse::<Model>().map_err(wrap)?),
            "error_rate" | "error_rates" => {
                error_rates = parse_list(value)
                    .iter()
                    .map(|v| v.parse::<ErrorRate>().map_err(wrap))
                    .collect::<Result<_>>()?
            }
            "alpha" => alpha = parse_num(value, &key, line)?,
            "replicates" => {
                replicates = Some(
                    parse_list(value)
                        .iter()
                        .map(|v| parse_num(v, &key, line))
                        .collect::<Result<Vec<usize>>>()?,
                )
            }
            "repetitions" => repetitions = parse_num(value, &key, line)?,
            "seed" => seed = parse_num(value, &key, line)?,
            "inner_mc" => inner_mc = parse_num(value, &key, line)?,
            "lenth_samples" => lenth_samples = parse_num(value, &key, line)?,
            "smm_samples" => smm_samples = parse_num(value, &key, line)?,
            "methods" => {
                methods = Some(
                    parse_list(value)
                        .iter()
                        .map(|v| v.parse::<Method>().map_err(wrap))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            other => return Err(perr(line, format!("unknown key {other:?}"))),
        }
    }
    if let Some(done) = current.take() {
        cases.push(done.finish()?);
    }
    let model = model.ok_or_else(|| perr(0, "missing required key: model"))?;
    let replicates = replicates.ok_or_else(|| perr(0, "missing required key: replicates"))?;
    let methods = methods.unwrap_or_else(|| {
        Method::ALL
            .into_iter()
            .filter(|m| error_rates.iter().all(|&r| m.supports(r)))
            .collect()
    });
    let scenario = Scenario {
        title,
        model,
        error_rates,
        alpha,
        replicates,
        repetitions,
        seed,
        inner_mc,
        lenth_samples,
        smm_samples,
        methods,
        cases,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn read_scenario(path: &std::path::Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}
