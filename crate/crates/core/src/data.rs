//! Replicated responses and their per-run summaries.

use crate::error::{Error, Result};

/// Responses y_ij for m runs with n replicates each, plus the run means ȳ_i
/// and run variances s_i² (divisor n − 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatedData {
    runs: usize,
    replicates: usize,
    /// runs × replicates, row-major.
    responses: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl ReplicatedData {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let runs = rows.len();
        if runs == 0 {
            return Err(Error::Validation("no runs in the response table".into()));
        }
        let replicates = rows[0].len();
        let mut responses = Vec::with_capacity(runs * replicates);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != replicates {
                return Err(Error::Validation(format!(
                    "run {} has {} replicates, expected {replicates} (unequal replication is not supported)",
                    i + 1,
                    row.len()
                )));
            }
            responses.extend_from_slice(row);
        }
        Self::from_flat(runs, replicates, responses)
    }

    /// `responses` is runs × replicates, row-major.
    pub fn from_flat(runs: usize, replicates: usize, responses: Vec<f64>) -> Result<Self> {
        if replicates < 2 {
            return Err(Error::Validation(format!(
                "at least 2 replicates per run are needed, got {replicates}"
            )));
        }
        if responses.len() != runs * replicates {
            return Err(Error::Validation(format!(
                "expected {} responses for {runs} runs x {replicates} replicates, got {}",
                runs * replicates,
                responses.len()
            )));
        }
        if let Some(pos) = responses.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "response for run {} replicate {} is not finite",
                pos / replicates + 1,
                pos % replicates + 1
            )));
        }
        let (means, variances) = responses.chunks_exact(replicates).map(mean_var).unzip();
        Ok(Self { runs, replicates, responses, means, variances })
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn row(&self, run: usize) -> &[f64] {
        &self.responses[run * self.replicates..(run + 1) * self.replicates]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.responses.chunks_exact(self.replicates)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// 1-based indices of runs whose sample variance is exactly zero.
    pub fn zero_variance_runs(&self) -> Vec<usize> {
        self.variances
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 0.0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// log s_i² per run; errors naming every run with s_i² = 0.
    pub fn log_variances(&self) -> Result<Vec<f64>> {
        let zero = self.zero_variance_runs();
        if !zero.is_empty() {
            return Err(Error::Degenerate(format!(
                "zero sample variance in run(s) {}; log s^2 is undefined",
                join_indices(&zero)
            )));
        }
        Ok(self.variances.iter().map(|v| v.ln()).collect())
    }
}

pub(crate) fn join_indices(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}

/// Sample mean and variance (divisor len − 1), two-pass.
pub fn mean_var(row: &[f64]) -> (f64, f64) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let ss: f64 = row.iter().map(|y| (y - mean) * (y - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Per-run means and variances of an m × n response table.
pub fn summarize(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let data = ReplicatedData::from_rows(rows)?;
    Ok((data.means, data.variances))
}
