//! Seeded samplers and empirical quantiles.
//!
//! Monte Carlo loops are cut into fixed blocks of [`BLOCK_SIZE`] draws. Block
//! `b` draws from `state.block(b)`, so the sample is the same whether the
//! blocks run on one thread or many.

use super::rng::RngState;
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

pub const BLOCK_SIZE: usize = 8_192;

/// Smallest Monte Carlo sample accepted by the critical-value routines.
pub const MIN_MC_SAMPLES: usize = 10_000;

/// Largest df sampled exactly from uniforms and normals; above it we defer
/// to `rand_distr`'s gamma-based sampler.
const SMALL_DF: u64 = 20;

/// Degrees of freedom for a χ² denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dof {
    Finite(u64),
    Infinite,
}

impl std::fmt::Display for Dof {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dof::Finite(v) => write!(f, "{v}"),
            Dof::Infinite => f.write_str("inf"),
        }
    }
}

/// χ²_df sampler for integer df.
///
/// For small df the draw is −2·ln(U₁⋯U_k) (a sum of k χ²₂ variables) plus
/// one squared normal when df is odd.
#[derive(Debug, Clone)]
pub struct ChiSquareSampler {
    df: u64,
    large: Option<ChiSquared<f64>>,
}

impl ChiSquareSampler {
    pub fn new(df: u64) -> Result<Self> {
        if df == 0 {
            return Err(Error::Domain("chi-square degrees of freedom must be >= 1".into()));
        }
        let large = if df > SMALL_DF {
            Some(ChiSquared::new(df as f64).map_err(|e| Error::Domain(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { df, large })
    }

    pub fn df(&self) -> u64 {
        self.df
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v = match &self.large {
                Some(dist) => dist.sample(rng),
                None => {
                    let mut v = 0.0;
                    let pairs = self.df / 2;
                    if pairs > 0 {
                        let mut prod = 1.0;
                        for _ in 0..pairs {
                            // 1 − U lies in (0, 1].
                            prod *= 1.0 - rng.random::<f64>();
                        }
                        v = -2.0 * prod.ln();
                    }
                    if self.df % 2 == 1 {
                        let z: f64 = rng.sample(StandardNormal);
                        v += z * z;
                    }
                    v
                }
            };
            if v > 0.0 {
                return v;
            }
        }
    }
}

/// `count` independent χ²_df draws, all strictly positive.
pub fn sample_chi_square(state: RngState, df: u64, count: usize) -> Result<Vec<f64>> {
    let sampler = ChiSquareSampler::new(df)?;
    Ok(blocked(state, count, |rng, out| {
        for v in out.iter_mut() {
            *v = sampler.sample(rng);
        }
    }))
}

/// Runs `fill` over fixed-size blocks in parallel and concatenates them in
/// block order.
pub(crate) fn blocked<F>(state: RngState, count: usize, fill: F) -> Vec<f64>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut [f64]) + Sync,
{
    blocked_rows(state, count, 1, fill)
}

/// Like [`blocked`], for draws that each produce `width` values. Blocks hold
/// [`BLOCK_SIZE`] draws, so the block layout does not depend on `width`.
pub(crate) fn blocked_rows<F>(state: RngState, draws: usize, width: usize, fill: F) -> Vec<f64>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut [f64]) + Sync,
{
    let mut out = vec![0.0; draws * width];
    out.par_chunks_mut(BLOCK_SIZE * width.max(1))
        .enumerate()
        .for_each(|(b, chunk)| {
            let mut rng = state.block(b as u64).rng();
            fill(&mut rng, chunk);
        });
    out
}

/// Lower-triangular factor of a positive-semidefinite matrix, from a
/// diagonally pivoted Cholesky decomposition.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    dim: usize,
    rank: usize,
    /// `dim × rank`, row-major, rows in pivot order.
    lower: Vec<f64>,
    /// `perm[k]` is the original coordinate of pivot row k.
    perm: Vec<usize>,
}

/// Relative tolerance for indefiniteness and rank truncation.
pub const PSD_TOLERANCE: f64 = 1e-8;

impl PsdFactor {
    /// Symmetrizes `cov` as (C + Cᵀ)/2 and factors it. Pivots at or below
    /// 1e-8·max|C| end the factorization; any remaining diagonal below
    /// −1e-8·max|C| (or off-diagonal coupling above it) is reported as an
    /// indefinite matrix.
    pub fn new(cov: &[Vec<f64>]) -> Result<Self> {
        let dim = cov.len();
        if dim == 0 {
            return Err(Error::Matrix("covariance matrix is empty".into()));
        }
        if let Some(bad) = cov.iter().position(|row| row.len() != dim) {
            return Err(Error::Matrix(format!(
                "covariance is not square: row {bad} has {} entries, expected {dim}",
                cov[bad].len()
            )));
        }
        let mut a = vec![0.0; dim * dim];
        let mut norm = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let v = 0.5 * (cov[i][j] + cov[j][i]);
                if !v.is_finite() {
                    return Err(Error::Matrix(format!("covariance entry ({i}, {j}) is not finite")));
                }
                a[i * dim + j] = v;
                norm = norm.max(v.abs());
            }
        }
        let tol = PSD_TOLERANCE * norm;
        let mut perm: Vec<usize> = (0..dim).collect();
        let mut l = vec![0.0; dim * dim];
        let mut diag: Vec<f64> = (0..dim).map(|i| a[i * dim + i]).collect();
        let mut rank = dim;

        for k in 0..dim {
            let mut p = k;
            for i in k + 1..dim {
                if diag[i] > diag[p] {
                    p = i;
                }
            }
            if diag[p] <= tol {
                // Remaining Schur complement must be numerically zero.
                for i in k..dim {
                    if diag[i] < -tol {
                        return Err(Error::Matrix(format!(
                            "covariance is indefinite: pivot {:.3e} below tolerance -{tol:.3e}",
                            diag[i]
                        )));
                    }
                    for j in k..i {
                        let mut s = a[i * dim + j];
                        for c in 0..k {
                            s -= l[i * dim + c] * l[j * dim + c];
                        }
                        if s.abs() > tol {
                            return Err(Error::Matrix(format!(
                                "covariance is indefinite: residual coupling {s:.3e} with zero pivots"
                            )));
                        }
                    }
                }
                rank = k;
                break;
            }
            if p != k {
                for c in 0..dim {
                    a.swap(k * dim + c, p * dim + c);
                }
                for r in 0..dim {
                    a.swap(r * dim + k, r * dim + p);
                }
                for c in 0..k {
                    l.swap(k * dim + c, p * dim + c);
                }
                diag.swap(k, p);
                perm.swap(k, p);
            }
            let pivot = diag[k].sqrt();
            l[k * dim + k] = pivot;
            for i in k + 1..dim {
                let mut s = a[i * dim + k];
                for c in 0..k {
                    s -= l[i * dim + c] * l[k * dim + c];
                }
                let v = s / pivot;
                l[i * dim + k] = v;
                diag[i] -= v * v;
            }
        }

        let mut lower = vec![0.0; dim * rank];
        for i in 0..dim {
            lower[i * rank..(i + 1) * rank].copy_from_slice(&l[i * dim..i * dim + rank]);
        }
        Ok(Self { dim, rank, lower, perm })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Maps `rank` standard normals to a draw with the factored covariance,
    /// written in the original coordinate order.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.rank);
        for (k, &orig) in self.perm.iter().enumerate() {
            let row = &self.lower[k * self.rank..(k + 1) * self.rank];
            let upto = (k + 1).min(self.rank);
            let mut s = 0.0;
            for c in 0..upto {
                s += row[c] * z[c];
            }
            out[orig] = s;
        }
    }

    /// max_l |U_l| for U = L z, without materializing U.
    #[inline]
    pub fn max_abs(&self, z: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for k in 0..self.dim {
            let row = &self.lower[k * self.rank..(k + 1) * self.rank];
            let upto = (k + 1).min(self.rank);
            let mut s = 0.0;
            for c in 0..upto {
                s += row[c] * z[c];
            }
            best = best.max(s.abs());
        }
        best
    }
}

/// `count` draws of max_l |U_l| with U ~ MVN(0, covariance).
pub fn sample_mvn_max_abs(state: RngState, covariance: &[Vec<f64>], count: usize) -> Result<Vec<f64>> {
    let factor = PsdFactor::new(covariance)?;
    Ok(blocked(state, count, |rng, out| {
        let mut z = vec![0.0; factor.rank()];
        for v in out.iter_mut() {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            *v = factor.max_abs(&z);
        }
    }))
}

/// 1-based order-statistic index ceil(p·M), clamped to [1, M]. The product is
/// shaved by a relative 1e-12 so that exact multiples such as 0.975·10⁵ are
/// not pushed up one rank by rounding.
pub fn quantile_rank(p: f64, len: usize) -> usize {
    let raw = (p * len as f64 * (1.0 - 1e-12)).ceil();
    (raw.max(1.0) as usize).min(len)
}

/// A finalized Monte Carlo sample, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_unstable_by(f64::total_cmp);
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if self.values.is_empty() {
            return Err(Error::State("empirical quantile of an empty sample".into()));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        Ok(self.values[quantile_rank(p, self.values.len()) - 1])
    }

    /// Distribution-free standard error of the p-quantile: half the spread of
    /// the order statistics at p ± sqrt(p(1−p)/M).
    pub fn quantile_se(&self, p: f64) -> Result<f64> {
        let m = self.values.len();
        if m < 2 {
            return Err(Error::State("quantile standard error needs at least 2 values".into()));
        }
        let h = (p * (1.0 - p) / m as f64).sqrt();
        let lo = self.values[quantile_rank((p - h).max(f64::MIN_POSITIVE), m) - 1];
        let hi = self.values[quantile_rank((p + h).min(1.0 - f64::EPSILON), m) - 1];
        Ok(0.5 * (hi - lo))
    }
}

pub fn empirical_quantile(sample: &EmpiricalSample, p: f64) -> Result<f64> {
    sample.quantile(p)
}

/// Same order statistic as [`EmpiricalSample::quantile`], found by selection
/// instead of a full sort. Reorders `values`.
pub(crate) fn select_quantile(values: &mut [f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::State("empirical quantile of an empty sample".into()));
    }
    let k = quantile_rank(p, values.len()) - 1;
    let (_, v, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*v)
}

/// Monte Carlo draws of max_{l≤I} |Z_l| / sqrt(W/df), Z_l iid N(0,1) and one
/// shared W ~ χ²_df per draw (denominator 1 when df is infinite).
pub fn sample_smm(state: RngState, effects: usize, df: Dof, count: usize) -> Result<Vec<f64>> {
    if effects == 0 {
        return Err(Error::Domain("studentized maximum modulus needs I >= 1".into()));
    }
    let chi = match df {
        Dof::Finite(v) => Some((ChiSquareSampler::new(v)?, v as f64)),
        Dof::Infinite => None,
    };
    Ok(blocked(state, count, |rng, out| {
        for v in out.iter_mut() {
            let mut best = 0.0f64;
            for _ in 0..effects {
                let z: f64 = rng.sample(StandardNormal);
                best = best.max(z.abs());
            }
            *v = match &chi {
                Some((s, d)) => best / (s.sample(rng) / d).sqrt(),
                None => best,
            };
        }
    }))
}

/// Monte Carlo p-quantile of the studentized maximum modulus distribution
/// with parameters I and df.
pub fn smm_quantile(state: RngState, effects: usize, df: Dof, p: f64, samples: usize) -> Result<f64> {
    check_mc_samples(samples)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let mut draws = sample_smm(state, effects, df, samples)?;
    select_quantile(&mut draws, p)
}

pub(crate) fn check_mc_samples(samples: usize) -> Result<()> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::Domain(format!(
            "Monte Carlo sample count must be >= {MIN_MC_SAMPLES}, got {samples}"
        )));
    }
    Ok(())
}
