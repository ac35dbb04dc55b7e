use clap::{Args, Parser, Subcommand};
use factscreen::analysis::{analyze, AnalysisConfig, DEFAULT_ALPHA, DEFAULT_SEED};
use factscreen::design::{Design, EffectSpec};
use factscreen::distributions::RngState;
use factscreen::effects::{fit, half_normal_points, Model};
use factscreen::fixtures::{verify_fixtures, VerifyOptions};
use factscreen::io;
use factscreen::methods::{
    disp_eer_critical, disp_ier_critical, lenth_critical, mc_location_eer_critical, mc_location_ier_critical,
    variance_weights, vca_critical, wh_dispersion_critical, wh_location_critical, McCriticalResult,
    DEFAULT_LENTH_SAMPLES, DEFAULT_MC_SAMPLES, DEFAULT_SMM_SAMPLES,
};
use factscreen::report::{ErrorRate, Method, TestReport};
use factscreen::sim::{estimate_error_rates, read_scenario};
use factscreen::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Screening of location and dispersion effects in replicated two-level
/// factorial experiments.
#[derive(Parser)]
#[command(name = "factscreen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test every effect of a dataset and print the decisions.
    Analyze(AnalyzeArgs),
    /// Print a critical value.
    Critical(CriticalArgs),
    /// Run an error-rate simulation scenario.
    Simulate(SimulateArgs),
    /// Export half-normal plot coordinates.
    Halfnormal(HalfnormalArgs),
    /// Check the bundled fixture manifests.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct DatasetArgs {
    /// Design CSV: header of factor names, one row of -1/+1 levels per run.
    #[arg(long)]
    design: PathBuf,
    /// Responses CSV: header row, one row of n replicates per run.
    #[arg(long)]
    responses: PathBuf,
    /// "full", "order=K", or a comma-separated list such as "A,B,AB".
    #[arg(long, default_value = "full")]
    effects: String,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long, default_value = "location")]
    model: Model,
    #[arg(long, default_value = "mc")]
    method: Method,
    #[arg(long = "error-rate", default_value = "ier")]
    error_rate: ErrorRate,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Monte Carlo sample size (default depends on the method).
    #[arg(long = "mc-samples")]
    mc_samples: Option<usize>,
    #[arg(long, env = "FACTSCREEN_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[command(flatten)]
    test: TestArgs,
    /// Write the per-effect report as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CriticalArgs {
    #[command(flatten)]
    test: TestArgs,
    /// Number of runs m.
    #[arg(long)]
    runs: Option<usize>,
    /// Replicates per run n.
    #[arg(long)]
    replicates: Option<usize>,
    /// Number of tested effects I (default m − 1).
    #[arg(long = "effect-count")]
    effect_count: Option<usize>,
    /// One-column CSV of run variances s_i², required for the MC location method.
    #[arg(long)]
    variances: Option<PathBuf>,
    /// Design CSV for MC location EER values (default: full factorial on m runs).
    #[arg(long)]
    design: Option<PathBuf>,
    #[arg(long, default_value = "full")]
    effects: String,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file.
    scenario: PathBuf,
    /// Output path prefix; writes PREFIX.csv and PREFIX.txt (default: the
    /// scenario file name in the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario's repetition count N.
    #[arg(long)]
    repetitions: Option<usize>,
    /// Override the per-repetition Monte Carlo size.
    #[arg(long = "mc-samples")]
    mc_samples: Option<usize>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct HalfnormalArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, default_value = "location")]
    model: Model,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Fixture directory.
    #[arg(long, default_value = "fixtures")]
    fixtures: PathBuf,
    /// Also rerun the simulation tables.
    #[arg(long)]
    tables: bool,
    /// Use N = 20,000 repetitions and 3-standard-error tolerances for tables.
    #[arg(long)]
    full: bool,
}

fn parse_effects(text: &str) -> Result<EffectSpec> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("full") {
        return Ok(EffectSpec::Full);
    }
    if let Some(order) = t.strip_prefix("order=").or_else(|| t.strip_prefix("order")) {
        return order
            .trim()
            .parse()
            .map(EffectSpec::UpToOrder)
            .map_err(|_| Error::Validation(format!("bad interaction order in --effects {text:?}")));
    }
    Ok(EffectSpec::List(t.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()))
}

fn load(args: &DatasetArgs) -> Result<(Design, factscreen::data::ReplicatedData)> {
    io::read_dataset(&args.design, &args.responses, parse_effects(&args.effects)?)
}

fn print_report(r: &TestReport) {
    println!("model: {}  method: {}  error rate: {}  alpha: {}", r.model, r.method.label(), r.error_rate, r.alpha);
    println!("runs: {}  replicates: {}  effects: {}", r.meta.runs, r.meta.replicates, r.meta.effects);
    println!("critical value: {:.6}", r.critical);
    if let (Some(rng), Some(m)) = (r.meta.rng, r.meta.mc_samples) {
        print!("monte carlo: seed {} stream {}, {m} samples", rng.seed, rng.stream);
        match r.meta.quantile_se {
            Some(se) => println!(", quantile standard error {se:.5}"),
            None => println!(),
        }
    }
    for note in &r.meta.notes {
        println!("note: {note}");
    }
    let w = r.rows.iter().map(|x| x.effect.len()).max().unwrap_or(6).max(6);
    println!("\n{:w$}  {:>12}  {:>12}  {:>10}  significant", "effect", "estimate", "statistic", "critical");
    for row in &r.rows {
        println!(
            "{:w$}  {:>12.6}  {:>12.6}  {:>10.6}  {}",
            row.effect,
            row.estimate,
            row.statistic,
            row.critical,
            if row.significant { "yes" } else { "no" }
        );
    }
    let sig = r.significant_effects();
    println!("\nsignificant: {}", if sig.is_empty() { "none".to_string() } else { sig.join(", ") });
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let (design, data) = load(&args.dataset)?;
    let config = AnalysisConfig {
        model: args.test.model,
        method: args.test.method,
        error_rate: args.test.error_rate,
        alpha: args.test.alpha,
        mc_samples: args.test.mc_samples,
        seed: args.test.seed,
    };
    let report = analyze(&design, &data, &config)?;
    print_report(&report);
    if let Some(out) = &args.out {
        io::with_output(Some(out), |w| io::write_report_csv(w, &report))?;
    }
    Ok(())
}

fn require(value: Option<usize>, flag: &str) -> Result<usize> {
    value.ok_or_else(|| Error::Usage(format!("this critical value needs --{flag}")))
}

fn print_mc(res: &McCriticalResult) {
    println!("critical value: {:.6}", res.critical);
    println!("seed: {}  stream: {}  samples: {}", res.rng.seed, res.rng.stream, res.samples);
    println!("quantile standard error: {:.5}", res.quantile_se);
}

fn cmd_critical(args: &CriticalArgs) -> Result<()> {
    let t = &args.test;
    t.method.check_supports(t.error_rate)?;
    let rng = RngState::from_seed(t.seed);
    let effects = || -> Result<usize> {
        match (args.effect_count, args.runs) {
            (Some(i), _) => Ok(i),
            (None, Some(m)) if m >= 2 => Ok(m - 1),
            _ => Err(Error::Usage("this critical value needs --effect-count or --runs".into())),
        }
    };
    let fixed = |v: f64| {
        println!("critical value: {v:.6}");
        Ok(())
    };
    match (t.method, t.model) {
        (Method::Mc, Model::Dispersion) => {
            let n = require(args.replicates, "replicates")?;
            fixed(match t.error_rate {
                ErrorRate::Ier => disp_ier_critical(t.alpha, n)?,
                ErrorRate::Eer => disp_eer_critical(t.alpha, n, effects()?)?,
            })
        }
        (Method::Mc, Model::Location) => {
            let path = args.variances.as_deref().ok_or_else(|| {
                Error::Usage("the MC location critical value depends on the data: pass --variances FILE".into())
            })?;
            let weights = variance_weights(&io::read_variances(path)?)?;
            let n = require(args.replicates, "replicates")?;
            let samples = t.mc_samples.unwrap_or(DEFAULT_MC_SAMPLES);
            let res = match t.error_rate {
                ErrorRate::Ier => mc_location_ier_critical(&weights, n, t.alpha, samples, rng)?,
                ErrorRate::Eer => {
                    let design = match &args.design {
                        Some(p) => io::read_design(p, parse_effects(&args.effects)?)?,
                        None => default_design(weights.len())?,
                    };
                    mc_location_eer_critical(&weights, &design, n, t.alpha, samples, rng)?
                }
            };
            print_mc(&res);
            Ok(())
        }
        (Method::Wh, model) => {
            let samples = t.mc_samples.unwrap_or(DEFAULT_SMM_SAMPLES);
            let v = match model {
                Model::Location => wh_location_critical(
                    t.alpha,
                    require(args.runs, "runs")?,
                    require(args.replicates, "replicates")?,
                    if t.error_rate == ErrorRate::Eer { effects()? } else { 1 },
                    t.error_rate,
                    rng,
                    samples,
                )?,
                Model::Dispersion => wh_dispersion_critical(
                    t.alpha,
                    if t.error_rate == ErrorRate::Eer { effects()? } else { 1 },
                    t.error_rate,
                    rng,
                    samples,
                )?,
            };
            println!("critical value: {v:.6}");
            if t.error_rate == ErrorRate::Eer {
                println!("seed: {}  stream: {}  samples: {samples}", rng.seed, rng.stream);
            }
            Ok(())
        }
        (Method::Vca, _) => fixed(vca_critical(
            t.alpha,
            require(args.runs, "runs")?,
            require(args.replicates, "replicates")?,
        )?),
        (Method::Lenth, _) => {
            let samples = t.mc_samples.unwrap_or(DEFAULT_LENTH_SAMPLES);
            print_mc(&lenth_critical(t.alpha, effects()?, t.error_rate, rng, samples)?);
            Ok(())
        }
    }
}

/// Full factorial with factors A, B, ... when the run count is a power of two.
fn default_design(runs: usize) -> Result<Design> {
    if !runs.is_power_of_two() || runs < 4 {
        return Err(Error::Usage(format!(
            "{runs} variances do not form a full factorial; pass --design for the EER value"
        )));
    }
    let k = runs.trailing_zeros() as usize;
    let names: Vec<String> = (0..k).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    Design::full_factorial(&names, EffectSpec::Full)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut scenario = read_scenario(&args.scenario)?;
    if let Some(n) = args.repetitions {
        scenario.repetitions = n;
    }
    if let Some(m) = args.mc_samples {
        scenario.inner_mc = m;
    }
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    let table = estimate_error_rates(&scenario)?;
    let prefix = match &args.out {
        Some(p) => p.clone(),
        None => PathBuf::from(args.scenario.file_stem().unwrap_or_default()),
    };
    let text = table.render_text();
    let csv_path = prefix.with_extension("csv");
    let txt_path = prefix.with_extension("txt");
    io::with_output(Some(&csv_path), |w| table.write_csv(w))?;
    std::fs::write(&txt_path, &text).map_err(|e| Error::Io(format!("{}: {e}", txt_path.display())))?;
    print!("{text}");
    println!("wrote {} and {}", csv_path.display(), txt_path.display());
    Ok(())
}

fn cmd_halfnormal(args: &HalfnormalArgs) -> Result<()> {
    let (design, data) = load(&args.dataset)?;
    let points = half_normal_points(&fit(&design, &data, args.model)?)?;
    io::with_output(args.out.as_deref(), |w| io::write_halfnormal_csv(w, &points))
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let report = verify_fixtures(
        Path::new(&args.fixtures),
        VerifyOptions { tables: args.tables || args.full, full: args.full },
    )?;
    print!("{}", report.render());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a).map(|_| true),
        Command::Critical(a) => cmd_critical(a).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a).map(|_| true),
        Command::Halfnormal(a) => cmd_halfnormal(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
