//! Coded ±1 designs for two-level factorial experiments.

use crate::error::{Error, Result};
use std::collections::HashSet;

/// Largest number of factors accepted by [`Design::full_factorial`].
pub const MAX_FACTORS: usize = 12;

/// Which effect columns a design carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EffectSpec {
    /// Every main effect and interaction.
    Full,
    /// Interactions up to and including this order.
    UpToOrder(usize),
    /// An explicit list of effect names such as `["A", "B", "AB"]`.
    List(Vec<String>),
}

/// An m × I matrix of ±1 entries with orthogonal, balanced columns.
///
/// Columns are main effects and interactions of the factors, each an
/// elementwise product of factor columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    factor_names: Vec<String>,
    effect_names: Vec<String>,
    effect_factors: Vec<Vec<usize>>,
    runs: usize,
    /// runs × effects, row-major.
    matrix: Vec<i8>,
    /// runs × factors, row-major.
    levels: Vec<i8>,
}

impl Design {
    /// Full 2^k factorial in standard order (the first factor alternates
    /// fastest). Effects are ordered mains first, then by interaction order,
    /// lexicographically in factor order within each order.
    pub fn full_factorial<S: AsRef<str>>(factor_names: &[S], effects: EffectSpec) -> Result<Self> {
        let k = factor_names.len();
        if !(2..=MAX_FACTORS).contains(&k) {
            return Err(Error::Validation(format!(
                "a full factorial needs between 2 and {MAX_FACTORS} factors, got {k}"
            )));
        }
        let runs = 1usize << k;
        let levels: Vec<Vec<i8>> = (0..runs)
            .map(|i| (0..k).map(|j| if (i >> j) & 1 == 1 { 1 } else { -1 }).collect())
            .collect();
        Self::from_factor_levels(factor_names, &levels, effects)
    }

    /// Builds effect columns from an m × k table of factor levels, which may
    /// be a full or fractional design. Every resulting column must be
    /// balanced and the columns mutually orthogonal.
    pub fn from_factor_levels<S: AsRef<str>>(
        factor_names: &[S],
        levels: &[Vec<i8>],
        effects: EffectSpec,
    ) -> Result<Self> {
        let factor_names: Vec<String> = factor_names.iter().map(|s| s.as_ref().trim().to_string()).collect();
        validate_factor_names(&factor_names)?;
        let k = factor_names.len();
        let runs = levels.len();
        if runs < 2 {
            return Err(Error::Validation(format!("a design needs at least 2 runs, got {runs}")));
        }
        for (i, row) in levels.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Validation(format!(
                    "run {} has {} factor levels, expected {k}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|&v| v != 1 && v != -1) {
                return Err(Error::Validation(format!(
                    "run {} factor {} has level {}, expected -1 or +1",
                    i + 1,
                    factor_names[j],
                    row[j]
                )));
            }
        }

        let effect_factors: Vec<Vec<usize>> = match effects {
            EffectSpec::Full => all_interactions(k, k),
            EffectSpec::UpToOrder(order) => {
                if order == 0 || order > k {
                    return Err(Error::Validation(format!(
                        "interaction order must lie in 1..={k}, got {order}"
                    )));
                }
                all_interactions(k, order)
            }
            EffectSpec::List(names) => {
                if names.is_empty() {
                    return Err(Error::Validation("effect list is empty".into()));
                }
                let mut seen = HashSet::new();
                let mut out = Vec::with_capacity(names.len());
                for name in &names {
                    let parsed = parse_effect(name, &factor_names)?;
                    if !seen.insert(parsed.clone()) {
                        return Err(Error::Validation(format!("effect {name} listed twice")));
                    }
                    out.push(parsed);
                }
                out
            }
        };
        let effect_names: Vec<String> = effect_factors
            .iter()
            .map(|f| effect_label(f, &factor_names))
            .collect();

        let cols = effect_factors.len();
        let mut matrix = vec![0i8; runs * cols];
        for (i, row) in levels.iter().enumerate() {
            for (l, factors) in effect_factors.iter().enumerate() {
                matrix[i * cols + l] = factors.iter().map(|&f| row[f]).product();
            }
        }
        let levels = levels.concat();
        let design = Self { factor_names, effect_names, effect_factors, runs, matrix, levels };
        design.validate()?;
        Ok(design)
    }

    fn validate(&self) -> Result<()> {
        if self.runs % 2 != 0 {
            return Err(Error::Validation(format!("a balanced design needs an even run count, got {}", self.runs)));
        }
        let cols = self.effect_count();
        if cols >= self.runs {
            return Err(Error::Validation(format!(
                "{cols} effects cannot be estimated from {} runs (at most {})",
                self.runs,
                self.runs - 1
            )));
        }
        for l in 0..cols {
            let minus = self.column(l).filter(|&v| v == -1).count();
            if minus * 2 != self.runs {
                return Err(Error::Validation(format!(
                    "effect {} is unbalanced: {minus} of {} entries are -1",
                    self.effect_names[l], self.runs
                )));
            }
        }
        let xtx = self.gram();
        for a in 0..cols {
            for b in 0..a {
                if xtx[a][b] != 0 {
                    return Err(Error::Validation(format!(
                        "effects {} and {} are not orthogonal (aliased or confounded)",
                        self.effect_names[b], self.effect_names[a]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn effect_count(&self) -> usize {
        self.effect_names.len()
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn effect_names(&self) -> &[String] {
        &self.effect_names
    }

    /// Factor indices whose product forms effect `l`.
    pub fn effect_factors(&self, l: usize) -> &[usize] {
        &self.effect_factors[l]
    }

    pub fn effect_index(&self, name: &str) -> Option<usize> {
        let parsed = parse_effect(name, &self.factor_names).ok()?;
        self.effect_factors.iter().position(|f| *f == parsed)
    }

    #[inline]
    pub fn entry(&self, run: usize, effect: usize) -> i8 {
        self.matrix[run * self.effect_count() + effect]
    }

    pub fn row(&self, run: usize) -> &[i8] {
        let c = self.effect_count();
        &self.matrix[run * c..(run + 1) * c]
    }

    pub fn column(&self, effect: usize) -> impl Iterator<Item = i8> + '_ {
        (0..self.runs).map(move |i| self.entry(i, effect))
    }

    /// Factor levels of one run, in factor order.
    pub fn factor_levels(&self, run: usize) -> &[i8] {
        let k = self.factor_names.len();
        &self.levels[run * k..(run + 1) * k]
    }

    /// XᵀX in exact integer arithmetic.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        let c = self.effect_count();
        let mut g = vec![vec![0i64; c]; c];
        for i in 0..self.runs {
            let row = self.row(i);
            for a in 0..c {
                for b in 0..=a {
                    g[a][b] += i64::from(row[a]) * i64::from(row[b]);
                }
            }
        }
        for a in 0..c {
            for b in 0..a {
                g[b][a] = g[a][b];
            }
        }
        g
    }
}

fn validate_factor_names(names: &[String]) -> Result<()> {
    if names.is_empty() {
        return Err(Error::Validation("no factors given".into()));
    }
    let mut seen = HashSet::new();
    for name in names {
        if name.is_empty() {
            return Err(Error::Validation("empty factor name".into()));
        }
        if name.contains(':') || name.contains(',') || name.chars().any(char::is_whitespace) {
            return Err(Error::Validation(format!("factor name {name:?} contains ':', ',' or whitespace")));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::Validation(format!("duplicate factor name {name}")));
        }
    }
    Ok(())
}

/// All factor subsets of size 1..=max_order, ordered by size, then
/// lexicographically by factor index.
fn all_interactions(k: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for order in 1..=max_order {
        let mut combo: Vec<usize> = (0..order).collect();
        loop {
            out.push(combo.clone());
            // Advance to the next combination in lexicographic order.
            let mut i = order;
            while i > 0 && combo[i - 1] == k - order + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..order {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

fn single_char_names(factor_names: &[String]) -> bool {
    factor_names.iter().all(|n| n.chars().count() == 1)
}

/// "AB" when every factor name is one character, "temp:speed" otherwise.
fn effect_label(factors: &[usize], factor_names: &[String]) -> String {
    let sep = if single_char_names(factor_names) { "" } else { ":" };
    factors
        .iter()
        .map(|&f| factor_names[f].as_str())
        .collect::<Vec<_>>()
        .join(sep)
}

/// Parses an effect label into sorted factor indices.
pub fn parse_effect(name: &str, factor_names: &[String]) -> Result<Vec<usize>> {
    let name = name.trim();
    let lookup = |part: &str| -> Result<usize> {
        factor_names
            .iter()
            .position(|f| f == part)
            .ok_or_else(|| Error::Validation(format!("effect {name:?} refers to unknown factor {part:?}")))
    };
    let mut idx: Vec<usize> = if name.contains(':') {
        name.split(':').map(|p| lookup(p.trim())).collect::<Result<_>>()?
    } else if single_char_names(factor_names) {
        name.chars().map(|c| lookup(&c.to_string())).collect::<Result<_>>()?
    } else {
        vec![lookup(name)?]
    };
    if idx.is_empty() {
        return Err(Error::Validation("empty effect name".into()));
    }
    idx.sort_unstable();
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Validation(format!("effect {name:?} repeats a factor")));
    }
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_factor_standard_order() {
        let d = Design::full_factorial(&["A", "B"], EffectSpec::Full).unwrap();
        assert_eq!(d.effect_names(), ["A", "B", "AB"]);
        let col = |l| d.column(l).collect::<Vec<_>>();
        assert_eq!(col(0), [-1, 1, -1, 1]);
        assert_eq!(col(1), [-1, -1, 1, 1]);
        assert_eq!(col(2), [1, -1, -1, 1]);
    }

    #[test]
    fn effect_counts_and_order() {
        let d3 = Design::full_factorial(&["A", "B", "C"], EffectSpec::Full).unwrap();
        assert_eq!(d3.effect_count(), 7);
        assert_eq!(d3.effect_names(), ["A", "B", "C", "AB", "AC", "BC", "ABC"]);
        let d4 = Design::full_factorial(&["A", "B", "C", "D"], EffectSpec::Full).unwrap();
        assert_eq!(d4.effect_count(), 15);
        assert_eq!(
            d4.effect_names(),
            ["A", "B", "C", "D", "AB", "AC", "AD", "BC", "BD", "CD", "ABC", "ABD", "ACD", "BCD", "ABCD"]
        );
        let d4_2 = Design::full_factorial(&["A", "B", "C", "D"], EffectSpec::UpToOrder(2)).unwrap();
        assert_eq!(d4_2.effect_count(), 10);
    }

    #[test]
    fn construction_errors() {
        assert!(Design::full_factorial(&["A", "A"], EffectSpec::Full).is_err());
        assert!(Design::full_factorial(&["A", "B"], EffectSpec::UpToOrder(3)).is_err());
        assert!(Design::full_factorial(&["A"], EffectSpec::Full).is_err());
        let many: Vec<String> = (0..13).map(|i| format!("F{i}")).collect();
        assert!(Design::full_factorial(&many, EffectSpec::Full).is_err());
    }

    #[test]
    fn multi_char_factor_labels() {
        let d = Design::full_factorial(&["temp", "speed"], EffectSpec::Full).unwrap();
        assert_eq!(d.effect_names(), ["temp", "speed", "temp:speed"]);
        assert_eq!(d.effect_index("speed:temp"), Some(2));
    }

    #[test]
    fn explicit_effect_list() {
        let d = Design::full_factorial(&["A", "B", "C"], EffectSpec::List(vec!["BA".into(), "C".into()])).unwrap();
        assert_eq!(d.effect_names(), ["AB", "C"]);
        assert!(Design::full_factorial(&["A", "B", "C"], EffectSpec::List(vec!["AD".into()])).is_err());
        assert!(Design::full_factorial(&["A", "B", "C"], EffectSpec::List(vec!["AB".into(), "BA".into()])).is_err());
    }

    #[test]
    fn half_fraction_accepts_unaliased_effects_only() {
        // 2^(3-1) with C = AB.
        let levels = vec![vec![-1, -1, 1], vec![1, -1, -1], vec![-1, 1, -1], vec![1, 1, 1]];
        let ok = Design::from_factor_levels(&["A", "B", "C"], &levels, EffectSpec::UpToOrder(1)).unwrap();
        assert_eq!(ok.effect_count(), 3);
        let aliased = Design::from_factor_levels(
            &["A", "B", "C"],
            &levels,
            EffectSpec::List(vec!["A".into(), "BC".into()]),
        );
        assert!(matches!(aliased, Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_non_pm_one_levels() {
        let levels = vec![vec![-1, 0], vec![1, 1], vec![-1, -1], vec![1, 1]];
        assert!(Design::from_factor_levels(&["A", "B"], &levels, EffectSpec::UpToOrder(1)).is_err());
    }
}
