//! Library values checked against slow, independent computations.

use factscreen::design::{Design, EffectSpec};
use factscreen::distributions::sampling::{smm_quantile, Dof};
use factscreen::distributions::special::{student_t_upper_quantile, t_two_sided_critical};
use factscreen::distributions::{normal_cdf, normal_quantile, trigamma, RngState};
use factscreen::effects::{estimate_effects, Model};
use factscreen::methods::{disp_eer_critical, disp_ier_critical, wh_location_critical};
use factscreen::report::ErrorRate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Composite Simpson rule with an even number of panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn quad_normal_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        0.5 + simpson(phi, 0.0, x, 20_000)
    } else {
        0.5 - simpson(phi, x, 0.0, 20_000)
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Student t density integrated from 0 to x (so the CDF minus one half).
fn t_half_mass(x: f64, df: f64) -> f64 {
    let c = (libm::lgamma(0.5 * (df + 1.0)) - libm::lgamma(0.5 * df)).exp() / (df * PI).sqrt();
    simpson(|u| c * (1.0 + u * u / df).powf(-0.5 * (df + 1.0)), 0.0, x, 20_000)
}

/// Brute-force series with an integral tail: Σ_{k<K} 1/(x+k)² + 1/(x+K) + 1/(2(x+K)²).
fn trigamma_series(x: f64) -> f64 {
    let k = 200_000usize;
    let mut s = 0.0;
    for i in 0..k {
        let y = x + i as f64;
        s += 1.0 / (y * y);
    }
    let y = x + k as f64;
    s + 1.0 / y + 0.5 / (y * y)
}

#[test]
fn normal_cdf_matches_quadrature() {
    for &x in &[-4.0, -2.5, -1.0, -0.3, 0.0, 0.7, 1.645, 1.96, 3.1] {
        assert!((normal_cdf(x) - quad_normal_cdf(x)).abs() < 1e-11, "x = {x}");
    }
}

#[test]
fn normal_quantile_inverts_quadrature_cdf() {
    for &p in &[0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.9995] {
        let z = bisect(|x| quad_normal_cdf(x) - p, -8.0, 8.0);
        assert!((normal_quantile(p).unwrap() - z).abs() < 1e-8, "p = {p}");
    }
}

#[test]
fn t_quantiles_invert_integrated_density() {
    for &(alpha, df) in &[(0.05, 16.0), (0.05, 40.0), (0.05, 48.0), (0.01, 5.0), (0.10, 3.0)] {
        let oracle = bisect(|x| t_half_mass(x, df) - (0.5 - 0.5 * alpha), 0.0, 50.0);
        let got = t_two_sided_critical(alpha, df).unwrap();
        assert!((got - oracle).abs() < 1e-7, "alpha {alpha} df {df}: {got} vs {oracle}");
        assert!((student_t_upper_quantile(0.5 * alpha, df).unwrap() - oracle).abs() < 1e-7);
    }
    assert!((t_two_sided_critical(0.05, 16.0).unwrap() - 2.1199).abs() < 1e-4);
}

#[test]
fn wh_ier_cutoff_is_t_quantile() {
    let c = wh_location_critical(0.05, 8, 3, 7, ErrorRate::Ier, RngState::from_seed(1), 10_000).unwrap();
    let oracle = bisect(|x| t_half_mass(x, 16.0) - 0.475, 0.0, 10.0);
    assert!((c - oracle).abs() < 1e-7);
}

#[test]
fn trigamma_matches_series() {
    for &x in &[0.5, 1.0, 1.5, 2.0, 3.5, 4.5, 7.0, 12.25] {
        let a = trigamma(x).unwrap();
        let b = trigamma_series(x);
        assert!(((a - b) / b).abs() < 1e-10, "x = {x}: {a} vs {b}");
    }
    assert!((trigamma(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-13);
    assert!((trigamma(0.5).unwrap() - PI * PI / 2.0).abs() < 1e-12);
}

#[test]
fn dispersion_closed_forms_match_quadrature_quantiles() {
    for n in 3..=10 {
        let a = (trigamma_series(0.5 * (n as f64 - 1.0)) * 0.5 * (n as f64 - 1.0)).sqrt();
        let z = bisect(|x| quad_normal_cdf(x) - 0.975, 0.0, 8.0);
        assert!((disp_ier_critical(0.05, n).unwrap() - a * z).abs() < 1e-8, "n = {n}");
        // P(max |Z| <= c) = (2Φ(c) − 1)^I = 0.95
        let ze = bisect(|x| (2.0 * quad_normal_cdf(x) - 1.0).powi(7) - 0.95, 0.0, 8.0);
        assert!((disp_eer_critical(0.05, n, 7).unwrap() - a * ze).abs() < 1e-8, "n = {n}");
    }
}

/// Least squares through the normal equations (XᵀX)β = Xᵀz with an explicit
/// intercept column, solved by Gaussian elimination with partial pivoting.
fn normal_equations(design: &Design, z: &[f64]) -> Vec<f64> {
    let m = design.runs();
    let p = design.effect_count() + 1;
    let x = |i: usize, j: usize| if j == 0 { 1.0 } else { f64::from(design.entry(i, j - 1)) };
    let mut a = vec![vec![0.0; p + 1]; p];
    for r in 0..p {
        for c in 0..p {
            a[r][c] = (0..m).map(|i| x(i, r) * x(i, c)).sum();
        }
        a[r][p] = (0..m).map(|i| x(i, r) * z[i]).sum();
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..p).map(|r| a[r][p] / a[r][r]).collect()
}

#[test]
fn effect_estimates_match_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in [EffectSpec::Full, EffectSpec::UpToOrder(2)] {
        let design = Design::full_factorial(&["A", "B", "C", "D"], spec).unwrap();
        let z: Vec<f64> = (0..design.runs()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let est = estimate_effects(&design, &z, Model::Location).unwrap();
        let beta = normal_equations(&design, &z);
        assert!((est.intercept - beta[0]).abs() < 1e-12);
        for (a, b) in est.coefficients.iter().zip(&beta[1..]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

/// P(SMM ≤ c) = ∫ (2Φ(cs) − 1)^I f_S(s) ds with S = sqrt(χ²_df / df).
fn smm_cdf(c: f64, effects: i32, df: f64) -> f64 {
    let log_norm = (1.0 - 0.5 * df) * 2f64.ln() - libm::lgamma(0.5 * df);
    let chi_pdf = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            (log_norm + (df - 1.0) * u.ln() - 0.5 * u * u).exp()
        }
    };
    let sd = df.sqrt();
    simpson(|s| (2.0 * normal_cdf(c * s) - 1.0).powi(effects) * chi_pdf(s * sd) * sd, 0.0, 4.0, 4_000)
}

#[test]
fn smm_monte_carlo_matches_quadrature() {
    for &(i, df) in &[(7usize, 16u64), (15, 48)] {
        let oracle = bisect(|c| smm_cdf(c, i as i32, df as f64) - 0.95, 1.0, 8.0);
        let mc = smm_quantile(RngState::new(11, 5), i, Dof::Finite(df), 0.95, 200_000).unwrap();
        assert!((mc - oracle).abs() < 0.02, "I {i} df {df}: {mc} vs {oracle}");
    }
    let oracle = bisect(|c| (2.0 * normal_cdf(c) - 1.0).powi(7) - 0.95, 1.0, 8.0);
    let mc = smm_quantile(RngState::new(11, 6), 7, Dof::Infinite, 0.95, 200_000).unwrap();
    assert!((mc - oracle).abs() < 0.02);
}
