//! Rejection-percentage tables.

use crate::effects::Model;
use crate::error::Result;
use crate::report::{ErrorRate, Method};
use std::fmt::Write as _;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub case: String,
    pub error_rate: ErrorRate,
    /// Effect name for IER rows, `I=<count>` for EER rows.
    pub row: String,
    pub null: bool,
    pub method: Method,
    pub replicates: usize,
    pub rejections: u64,
    pub repetitions: u64,
    /// Datasets discarded and redrawn because a statistic was undefined.
    pub degenerate: u64,
}

impl Cell {
    pub fn percent(&self) -> f64 {
        100.0 * self.rejections as f64 / self.repetitions as f64
    }

    /// Binomial standard error of the percentage.
    pub fn se(&self) -> f64 {
        let p = self.rejections as f64 / self.repetitions as f64;
        100.0 * (p * (1.0 - p) / self.repetitions as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRateTable {
    pub title: String,
    pub model: Model,
    pub alpha: f64,
    pub cells: Vec<Cell>,
}

impl ErrorRateTable {
    pub fn cell(&self, case: &str, rate: ErrorRate, row: &str, method: Method, n: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| {
            c.case == case && c.error_rate == rate && c.row == row && c.method == method && c.replicates == n
        })
    }

    /// First cell matching row, method and n regardless of case and rate.
    pub fn find(&self, row: &str, method: Method, n: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.row == row && c.method == method && c.replicates == n)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "case", "error_rate", "row", "null", "method", "n", "percent", "se", "rejections", "repetitions", "degenerate",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.case.clone(),
                c.error_rate.to_string(),
                c.row.clone(),
                c.null.to_string(),
                c.method.to_string(),
                c.replicates.to_string(),
                format!("{:.2}", c.percent()),
                format!("{:.2}", c.se()),
                c.rejections.to_string(),
                c.repetitions.to_string(),
                c.degenerate.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Distinct values in first-seen order.
    fn distinct<T: PartialEq + Clone>(&self, key: impl Fn(&Cell) -> T) -> Vec<T> {
        let mut out: Vec<T> = Vec::new();
        for c in &self.cells {
            let k = key(c);
            if !out.contains(&k) {
                out.push(k);
            }
        }
        out
    }

    /// Plain-text layout: one block per error rate and design, effect (or I)
    /// rows, and a column per method and n. Null rows are marked with `*`.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(s, "{}", self.title);
        }
        let reps = self.cells.first().map_or(0, |c| c.repetitions);
        let _ = writeln!(
            s,
            "{} model, alpha = {}, N = {reps} repetitions; percent rejected (* = true null)",
            self.model, self.alpha
        );
        let methods = self.distinct(|c| c.method);
        let ns = self.distinct(|c| c.replicates);
        let width = 6;
        for rate in self.distinct(|c| c.error_rate) {
            for case in self.distinct(|c| c.case.clone()) {
                let rows: Vec<(String, bool)> = self
                    .cells
                    .iter()
                    .filter(|c| c.error_rate == rate && c.case == case)
                    .fold(Vec::new(), |mut acc, c| {
                        if !acc.iter().any(|(r, _)| r == &c.row) {
                            acc.push((c.row.clone(), c.null));
                        }
                        acc
                    });
                if rows.is_empty() {
                    continue;
                }
                let _ = writeln!(s, "\n[{}] {}", rate.to_string().to_uppercase(), case);
                let label_w = rows.iter().map(|(r, _)| r.len() + 2).max().unwrap_or(6).max(8);
                let group_w = ns.len() * width;
                let _ = write!(s, "{:label_w$}", "");
                for m in &methods {
                    let _ = write!(s, " | {:<group_w$}", m.label());
                }
                let _ = write!(s, "\n{:label_w$}", "effect");
                for _ in &methods {
                    let _ = write!(s, " | ");
                    for n in &ns {
                        let _ = write!(s, "{:>width$}", format!("n={n}"));
                    }
                }
                s.push('\n');
                for (row, null) in &rows {
                    let label = if *null { format!("{row} *") } else { row.clone() };
                    let _ = write!(s, "{label:label_w$}");
                    for m in &methods {
                        let _ = write!(s, " | ");
                        for &n in &ns {
                            match self.cell(&case, rate, row, *m, n) {
                                Some(c) => {
                                    let _ = write!(s, "{:>width$.1}", c.percent());
                                }
                                None => {
                                    let _ = write!(s, "{:>width$}", "-");
                                }
                            }
                        }
                    }
                    s.push('\n');
                }
            }
        }
        let max_se = self.cells.iter().map(Cell::se).fold(0.0, f64::max);
        let degenerate: u64 = self.distinct(|c| (c.case.clone(), c.replicates, c.degenerate)).iter().map(|t| t.2).sum();
        let _ = writeln!(s, "\nlargest binomial standard error: {max_se:.2} pp; degenerate datasets redrawn: {degenerate}");
        s
    }
}
