//! Special functions: the standard normal CDF and its inverse, trigamma,
//! log-gamma, the regularized incomplete beta function, and the central t
//! and F quantiles built on it.

use crate::error::{Error, Result};
use std::f64::consts::{PI, SQRT_2};

fn check_probability(p: f64, what: &str) -> Result<()> {
    if p.is_nan() || p <= 0.0 || p >= 1.0 {
        return Err(Error::Domain(format!("{what} must lie in (0, 1), got {p}")));
    }
    Ok(())
}

/// Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// 1 − Φ(x), without cancellation in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

// Acklam's rational approximation, relative error ~1.15e-9 before refinement.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.02425;

fn acklam(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Lower-tail quantile for p ≤ 0.5, refined by one Halley step.
fn lower_quantile(p: f64) -> f64 {
    let x = acklam(p);
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Φ⁻¹(p) for p in (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_probability(p, "probability")?;
    if p == 0.5 {
        return Ok(0.0);
    }
    Ok(if p < 0.5 {
        lower_quantile(p)
    } else {
        -lower_quantile(1.0 - p)
    })
}

/// The x with 1 − Φ(x) = q. Preferable to `normal_quantile(1 - q)` when q is
/// tiny or itself the result of a subtraction.
pub fn normal_upper_quantile(q: f64) -> Result<f64> {
    check_probability(q, "upper-tail probability")?;
    if q == 0.5 {
        return Ok(0.0);
    }
    Ok(if q < 0.5 {
        -lower_quantile(q)
    } else {
        lower_quantile(1.0 - q)
    })
}

/// Shift threshold for the trigamma recurrence.
const TRIGAMMA_SHIFT: f64 = 6.0;

/// ψ′(x) for x > 0.
///
/// Upward recurrence ψ′(x) = ψ′(x+1) + 1/x² until x ≥ 6, then the
/// asymptotic series 1/x + 1/(2x²) + Σ B₂ₖ/x^(2k+1) through B₁₆.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("trigamma needs a finite x > 0, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < TRIGAMMA_SHIFT {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / x;
    let r2 = r * r;
    // Bernoulli numbers B2..B16, Horner form in 1/x².
    const BERNOULLI: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let series = r2 * BERNOULLI.iter().rev().fold(0.0, |acc, &b| acc * r2 + b);
    Ok(acc + r * (1.0 + 0.5 * r + series))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b), with `y = 1 − x` supplied by the
/// caller so neither tail loses precision.
pub fn reg_inc_beta(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * y.ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, y) / b
    }
}

/// P(T > t) for a central t variable with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    let t2 = t * t;
    let x = df / (df + t2);
    let y = t2 / (df + t2);
    let tail = 0.5 * reg_inc_beta(0.5 * df, 0.5, x, y);
    if t > 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// The t with P(T > t) = q, for `df` > 0 and q in (0, 1).
pub fn student_t_upper_quantile(q: f64, df: f64) -> Result<f64> {
    check_probability(q, "upper-tail probability")?;
    if !(df > 0.0) {
        return Err(Error::Domain(format!("degrees of freedom must be positive, got {df}")));
    }
    if q > 0.5 {
        return Ok(-student_t_upper_quantile(1.0 - q, df)?);
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while student_t_sf(hi, df) > q {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Domain(format!("t quantile for q={q}, df={df} overflows")));
        }
    }
    for _ in 0..2_000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if student_t_sf(mid, df) > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Two-sided central t cutoff t_{df, 1−α/2}.
pub fn t_two_sided_critical(alpha: f64, df: f64) -> Result<f64> {
    check_probability(alpha, "alpha")?;
    student_t_upper_quantile(0.5 * alpha, df)
}

/// Upper (1−α) quantile of F(1, df). Uses F(1, ν) = t_ν².
pub fn f1_critical(alpha: f64, df: f64) -> Result<f64> {
    let t = t_two_sided_critical(alpha, df)?;
    Ok(t * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_symmetry_and_domain() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        for p in [0.001, 0.025, 0.2, 0.4] {
            let lo = normal_quantile(p).unwrap();
            let hi = normal_quantile(1.0 - p).unwrap();
            assert!((lo + hi).abs() < 1e-9, "p={p}");
        }
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(normal_quantile(bad), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let x = normal_quantile(p).unwrap();
            assert!((normal_cdf(x) - p).abs() < 1e-14, "p={p}");
        }
        // Deep tail, relative check.
        let x = normal_upper_quantile(1e-20).unwrap();
        assert!((normal_sf(x) / 1e-20 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn trigamma_domain() {
        assert!(matches!(trigamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(trigamma(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn trigamma_closed_forms() {
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(trigamma(1.0).unwrap(), PI * PI / 6.0) < 1e-12);
        assert!(rel(trigamma(0.5).unwrap(), PI * PI / 2.0) < 1e-12);
        // ψ′(2) = π²/6 − 1
        assert!(rel(trigamma(2.0).unwrap(), PI * PI / 6.0 - 1.0) < 1e-12);
    }

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0));
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn t_quantile_limits() {
        // df = 1 is Cauchy: t_{1,0.975} = tan(0.475π).
        let c = t_two_sided_critical(0.05, 1.0).unwrap();
        assert!((c - (0.475 * PI).tan()).abs() < 1e-9);
        // df = 2 has closed form t = (2q−1)·sqrt(2 / (1 − (2q−1)²)) at lower prob q.
        let p: f64 = 0.975;
        let a = 2.0 * p - 1.0;
        let closed = a * (2.0 / (1.0 - a * a)).sqrt();
        assert!((t_two_sided_critical(0.05, 2.0).unwrap() - closed).abs() < 1e-10);
        // Large df approaches the normal.
        let z = normal_upper_quantile(0.025).unwrap();
        assert!((t_two_sided_critical(0.05, 1e7).unwrap() - z).abs() < 1e-6);
        assert!(t_two_sided_critical(0.999_999, 16.0).unwrap() < 1e-5);
    }
}
