//! Acceptance criteria. Each test prints one PASS/FAIL line and fails when
//! its criterion is not met.
//!
//! The simulation criteria take several minutes in total; the full
//! N = 20,000 reproduction is `#[ignore]`d and meant as an overnight job.

use factscreen::data::ReplicatedData;
use factscreen::design::{Design, EffectSpec};
use factscreen::distributions::sampling::{smm_quantile, Dof};
use factscreen::distributions::special::t_two_sided_critical;
use factscreen::distributions::{trigamma, RngState};
use factscreen::effects::Model;
use factscreen::fixtures::{parse_manifest, verify_fixtures, VerifyOptions};
use factscreen::methods::{
    a_n, mc_location_eer_critical, mc_location_ier_critical, vca_f_statistics, wh_t_statistics, VarianceWeights,
};
use factscreen::report::Method;
use factscreen::sim::{estimate_error_rates, read_scenario, Cell, ErrorRateTable};
use rand::{Rng, SeedableRng};
use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Collects sub-check failures and prints the criterion's verdict line.
struct Criterion {
    number: &'static str,
    title: &'static str,
    checks: usize,
    failures: Vec<String>,
    start: Instant,
}

impl Criterion {
    fn new(number: &'static str, title: &'static str) -> Self {
        Self { number, title, checks: 0, failures: Vec::new(), start: Instant::now() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    /// Writes straight to the process stdout so the verdict shows even when
    /// the test harness captures output.
    fn finish(self) {
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        let mut text = format!(
            "criterion {:>2} {verdict}: {} ({} checks, {} failed, {:.1} s)\n",
            self.number,
            self.title,
            self.checks,
            self.failures.len(),
            self.start.elapsed().as_secs_f64()
        );
        for f in &self.failures {
            text.push_str(&format!("    {f}\n"));
        }
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(text.as_bytes());
        let _ = out.flush();
        assert!(self.failures.is_empty(), "criterion {} failed", self.number);
    }
}

/// Reference percentages keyed by `tableT/METHOD/ROW/n=N`.
fn reference_cells() -> HashMap<String, f64> {
    let text = std::fs::read_to_string(fixtures().join("manifests/tables.csv")).unwrap();
    parse_manifest(&text).unwrap().into_iter().map(|e| (e.id, e.expected)).collect()
}

fn simulate(table: u32) -> ErrorRateTable {
    let scenario = read_scenario(&fixtures().join(format!("scenarios/table{table}.scn"))).unwrap();
    estimate_error_rates(&scenario).unwrap()
}

fn reference(cells: &HashMap<String, f64>, table: u32, c: &Cell) -> f64 {
    let key = format!("table{table}/{}/{}/n={}", c.method, c.row, c.replicates);
    *cells.get(&key).unwrap_or_else(|| panic!("no reference value for {key}"))
}

fn describe(c: &Cell) -> String {
    format!("{} {} {} n={}: {:.2}%", c.case, c.method, c.row, c.replicates, c.percent())
}

fn cells(t: &ErrorRateTable, method: Method) -> impl Iterator<Item = &Cell> {
    t.cells.iter().filter(move |c| c.method == method)
}

#[test]
fn criterion_01_table1() {
    let mut c = Criterion::new("1", "a_n and exact log-variance for n = 3..10");
    let expected = [1.283, 1.184, 1.136, 1.107, 1.088, 1.075, 1.066, 1.058];
    for (n, &e) in (3..=10).zip(&expected) {
        let a = a_n(n).unwrap();
        c.check((a - e).abs() <= 5e-4, || format!("a_{n} = {a:.6}, table {e}"));
        let exact = factscreen::methods::mc::exact_log_variance(n).unwrap();
        let oracle = trigamma(0.5 * (n as f64 - 1.0)).unwrap();
        c.check((exact - oracle).abs() <= 5e-4, || format!("exact variance n={n}: {exact}"));
    }
    c.finish();
}

#[test]
fn criterion_02_f_equals_t_squared() {
    let mut c = Criterion::new("2", "location F = t^2 on 100 random datasets");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let factors: &[&str] = if k % 2 == 0 { &["A", "B", "C"] } else { &["A", "B", "C", "D"] };
        let design = Design::full_factorial(factors, EffectSpec::Full).unwrap();
        let n = 3 + k / 2 % 4;
        let rows: Vec<Vec<f64>> = (0..design.runs())
            .map(|_| {
                let sd = rng.random_range(0.1..10.0);
                let mu = rng.random_range(-20.0..20.0);
                (0..n).map(|_| mu + sd * rng.random_range(-1.0..1.0)).collect()
            })
            .collect();
        let data = ReplicatedData::from_rows(&rows).unwrap();
        let t = wh_t_statistics(&design, &data).unwrap();
        let f = vca_f_statistics(&design, &data, Model::Location).unwrap();
        for (t, f) in t.iter().zip(&f) {
            worst = worst.max(((f - t * t) / (t * t)).abs());
        }
    }
    c.check(worst <= 1e-10, || format!("max relative error {worst:e}"));
    c.finish();
}

#[test]
fn criterion_03_homogeneous_limits() {
    let mut c = Criterion::new("3", "homogeneous MC critical values converge to t and SMM");
    for (k, (m, n)) in [(8usize, 3usize), (8, 6), (16, 4)].into_iter().enumerate() {
        let w = VarianceWeights::homogeneous(m).unwrap();
        let df = (m * (n - 1)) as u64;
        let ier = mc_location_ier_critical(&w, n, 0.05, 200_000, RngState::new(31, k as u64)).unwrap().critical;
        let t = t_two_sided_critical(0.05, df as f64).unwrap();
        c.check((ier - t).abs() <= 0.02, || format!("IER m={m} n={n}: {ier:.4} vs t {t:.4}"));

        let factors = if m == 8 { vec!["A", "B", "C"] } else { vec!["A", "B", "C", "D"] };
        let design = Design::full_factorial(&factors, EffectSpec::Full).unwrap();
        let eer = mc_location_eer_critical(&w, &design, n, 0.05, 200_000, RngState::new(32, k as u64))
            .unwrap()
            .critical;
        let smm = smm_quantile(RngState::new(33, k as u64), m - 1, Dof::Finite(df), 0.95, 200_000).unwrap();
        c.check((eer - smm).abs() <= 0.03, || format!("EER m={m} n={n}: {eer:.4} vs SMM {smm:.4}"));
    }
    c.finish();
}

#[test]
fn criterion_04_table2() {
    let mut c = Criterion::new("4", "Table 2, homogeneous location IER, N = 4,000");
    let reference_cells = reference_cells();
    let table = simulate(2);
    for method in [Method::Mc, Method::Wh] {
        for cell in cells(&table, method) {
            let p = reference(&reference_cells, 2, cell);
            let tol = if cell.null { 1.5 } else { 3.0 };
            c.check((cell.percent() - p).abs() <= tol, || format!("{} (reference {p})", describe(cell)));
        }
    }
    c.finish();
}

#[test]
fn criterion_04b_inner_mc_sensitivity() {
    let mut c = Criterion::new("4b", "inner Monte Carlo size: 10,000 vs 40,000 draws, Table 4 at n = 3");
    let mut scenario = read_scenario(&fixtures().join("scenarios/table4.scn")).unwrap();
    scenario.replicates = vec![3];
    scenario.methods = vec![Method::Mc];
    scenario.repetitions = 1_000;
    scenario.inner_mc = 10_000;
    let small = estimate_error_rates(&scenario).unwrap();
    scenario.inner_mc = 40_000;
    let large = estimate_error_rates(&scenario).unwrap();
    for (a, b) in small.cells.iter().zip(&large.cells) {
        c.check((a.percent() - b.percent()).abs() <= 1.5, || {
            format!("{}: {:.1}% vs {:.1}%", a.row, a.percent(), b.percent())
        });
    }
    c.finish();
}

#[test]
fn criterion_05_table4() {
    let mut c = Criterion::new("5", "Table 4, heterogeneous location IER, N = 4,000");
    let reference_cells = reference_cells();
    let table = simulate(4);
    for cell in cells(&table, Method::Mc).filter(|c| c.null) {
        c.check((cell.percent() - 5.0).abs() <= 1.5, || describe(cell));
    }
    for cell in cells(&table, Method::Wh).filter(|c| c.null) {
        let p = reference(&reference_cells, 4, cell);
        c.check((cell.percent() - p).abs() <= 1.5, || format!("{} (reference {p})", describe(cell)));
        if cell.replicates == 3 {
            c.check(cell.percent() >= 6.4, || format!("{} not inflated", describe(cell)));
        }
    }
    c.finish();
}

#[test]
fn criterion_06_table7() {
    let mut c = Criterion::new("6", "Table 7, heterogeneous location EER, N = 4,000");
    let table = simulate(7);
    for cell in cells(&table, Method::Mc) {
        c.check((cell.percent() - 5.0).abs() <= 1.5, || describe(cell));
    }
    for cell in cells(&table, Method::Wh).filter(|c| c.replicates == 3) {
        c.check(cell.percent() >= 6.0, || describe(cell));
    }
    for cell in cells(&table, Method::Lenth) {
        c.check(cell.percent() <= 3.5, || describe(cell));
    }
    c.finish();
}

#[test]
fn criterion_07_table8() {
    let mut c = Criterion::new("7", "Table 8, dispersion IER, N = 4,000");
    let reference_cells = reference_cells();
    let table = simulate(8);
    for cell in table.cells.iter().filter(|c| c.null) {
        match cell.method {
            Method::Mc => c.check((cell.percent() - 5.0).abs() <= 1.5, || describe(cell)),
            Method::Wh => {
                let p = reference(&reference_cells, 8, cell);
                c.check((cell.percent() - p).abs() <= 2.0, || format!("{} (reference {p})", describe(cell)));
            }
            Method::Vca => {
                let p = reference(&reference_cells, 8, cell);
                c.check((cell.percent() - p).abs() <= 1.5, || format!("{} (reference {p})", describe(cell)));
            }
            Method::Lenth => c.check(cell.percent() <= 3.0, || describe(cell)),
        }
    }
    c.finish();
}

#[test]
fn criterion_08_table10() {
    let mut c = Criterion::new("8", "Table 10, dispersion EER, N = 4,000");
    let table = simulate(10);
    let targets = [
        (Method::Mc, [5.5, 5.4], 1.5),
        (Method::Wh, [21.6, 26.4], 3.0),
        (Method::Lenth, [4.5, 4.3], 1.5),
    ];
    for (method, values, tol) in targets {
        for (row, target) in ["I=7", "I=15"].into_iter().zip(values) {
            let cell = table.find(row, method, 3).unwrap();
            c.check((cell.percent() - target).abs() <= tol, || format!("{} (target {target})", describe(cell)));
        }
    }
    c.finish();
}

#[test]
fn criterion_09_property_suites() {
    let mut c = Criterion::new("9", "property suites, each under 10 s");
    // Build first so that compile time is not counted against the suites.
    let cargo = env!("CARGO");
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("Cargo.toml");
    let build = Command::new(cargo)
        .args(["test", "--offline", "--no-run", "--test", "properties", "--manifest-path"])
        .arg(&manifest)
        .output()
        .unwrap();
    c.check(build.status.success(), || String::from_utf8_lossy(&build.stderr).into_owned());
    let start = Instant::now();
    let run = Command::new(cargo)
        .args(["test", "--offline", "--test", "properties", "--manifest-path"])
        .arg(&manifest)
        .output()
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    c.check(run.status.success(), || String::from_utf8_lossy(&run.stdout).into_owned());
    let out = String::from_utf8_lossy(&run.stdout);
    let passed = out.lines().filter(|l| l.starts_with("test ") && l.ends_with(" ok")).count();
    c.check(passed >= 12, || format!("only {passed} property tests reported ok"));
    c.check(elapsed < 10.0, || format!("property run took {elapsed:.1} s"));
    c.finish();
}

#[test]
#[ignore = "overnight: every Table 2-10 cell at N = 20,000"]
fn criterion_10_full_tables() {
    let mut c = Criterion::new("10", "Tables 2-10 at N = 20,000 within 3 binomial standard errors");
    let report = verify_fixtures(&fixtures(), VerifyOptions { tables: true, full: true }).unwrap();
    for check in &report.checks {
        c.check(check.passed, || format!("{} {}", check.entry.id, check.message));
    }
    c.finish();
}
