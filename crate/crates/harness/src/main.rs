use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ota_core::analysis::{certify, lb_consistency_max_search, lb_consistency_one_way, pareto_frontier};
use ota_core::engine::Policy;
use ota_core::thresholds::{one_way_design, reservation_price, NaiveMode, PiecewiseThreshold, TradeoffParams};
use ota_core::{PriceBounds64, ProblemKind};
use ota_harness::data::write_prices;
use ota_harness::synth::{geometric_walk, WalkConfig};
use ota_harness::verify::run_verify;
use ota_harness::{run_backtest, Algorithm, BacktestConfig, BoundsSpec, HarnessError};

#[derive(Parser)]
#[command(name = "ota", version, about = "Online conversion with untrusted predictions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure consistency, robustness and κ(ξ) of a policy family
    Certify(CertifyArgs),
    /// Emit the robustness-consistency frontier and its lower bound as CSV
    Pareto(ParetoArgs),
    /// Emit a threshold function as JSON or CSV
    Threshold(ThresholdArgs),
    /// Backtest λ-selection strategies on a price CSV
    Backtest(BacktestArgs),
    /// Run the invariant suite; exits 1 on any violation
    Verify(VerifyArgs),
    /// Generate a seeded geometric random walk price CSV
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(alias = "integral", alias = "1-max")]
    OneMax,
    #[value(alias = "fractional")]
    OneWay,
}

impl From<KindArg> for ProblemKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::OneMax => ProblemKind::Integral,
            KindArg::OneWay => ProblemKind::Fractional,
        }
    }
}

#[derive(Args)]
struct BoundsArgs {
    /// Price bounds as `L,U`; overrides --theta and --lower
    #[arg(long, value_parser = parse_pair)]
    bounds: Option<(f64, f64)>,
    /// Fluctuation ratio U/L
    #[arg(long, default_value_t = 5.0)]
    theta: f64,
    /// Lower price bound used with --theta
    #[arg(long, default_value_t = 2.0)]
    lower: f64,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected L,U")?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

impl BoundsArgs {
    fn resolve(&self) -> Result<PriceBounds64, HarnessError> {
        Ok(match self.bounds {
            Some((lower, upper)) => PriceBounds64::new(lower, upper)?,
            None => PriceBounds64::from_theta(self.lower, self.theta)?,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NaiveArg {
    Blind,
    Blend,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long, value_enum, default_value = "one-way")]
    kind: KindArg,
    #[command(flatten)]
    bounds: BoundsArgs,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Points in the prediction and peak grids
    #[arg(long, default_value_t = 21)]
    prediction_grid: usize,
    /// Length of the adversarial instances
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// Certify a 1-max-search warm-up baseline instead of the design
    #[arg(long, value_enum)]
    naive: Option<NaiveArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParetoArgs {
    #[arg(long, default_value_t = 5.0)]
    theta: f64,
    #[arg(long, value_enum, default_value = "one-way")]
    kind: KindArg,
    #[arg(long, default_value_t = 100)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long, value_enum, default_value = "one-way")]
    kind: KindArg,
    #[command(flatten)]
    bounds: BoundsArgs,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long)]
    prediction: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Samples in CSV output
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BacktestArgs {
    /// CSV with a `timestamp,price` header
    #[arg(long)]
    data: PathBuf,
    /// Ticks per window
    #[arg(long)]
    window: usize,
    /// Ticks between window starts
    #[arg(long)]
    stride: usize,
    /// Fixed lower bound; bounds are derived from the data unless both are set
    #[arg(long, requires = "upper")]
    lower: Option<f64>,
    #[arg(long, requires = "lower")]
    upper: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    error_level: f64,
    #[arg(long, default_value_t = 0.0)]
    crash_prob: f64,
    #[arg(long, env = "OTA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "one-way")]
    kind: KindArg,
    /// Comma separated subset of worst_case, offline_best, alf, best_static
    #[arg(long, value_delimiter = ',', default_value = "worst_case,offline_best,alf,best_static")]
    algorithms: Vec<String>,
    #[arg(long, default_value_t = 33)]
    grid: usize,
    /// Report JSON; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Boxplot CSV
    #[arg(long)]
    boxplot: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 5.0)]
    theta: f64,
    /// Write the full report as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    #[arg(long, default_value_t = 0.01)]
    vol: f64,
    #[arg(long, default_value_t = 10_000)]
    ticks: usize,
    #[arg(long, env = "OTA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100.0)]
    start: f64,
    #[arg(long, default_value_t = 50.0)]
    lower: f64,
    #[arg(long, default_value_t = 200.0)]
    upper: f64,
    /// Seconds between ticks
    #[arg(long, default_value_t = 300)]
    interval: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Outcome {
    Ok,
    Violation,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_algorithm(name: &str) -> Result<Algorithm, HarnessError> {
    Algorithm::ALL
        .into_iter()
        .find(|a| a.name() == name.trim())
        .ok_or_else(|| HarnessError::Config(format!("unknown algorithm {name:?}")))
}

fn cmd_certify(args: CertifyArgs) -> Result<Outcome, HarnessError> {
    let bounds = args.bounds.resolve()?;
    let kind = ProblemKind::from(args.kind);
    let lambda = args.lambda;
    let report = match args.naive {
        None => {
            let targets = TradeoffParams::new(kind, lambda, bounds.theta())?;
            certify(|p| Policy::learning_augmented(kind, &bounds, lambda, p), &bounds, targets, args.prediction_grid, args.steps)?
        }
        Some(naive) => {
            let mode = match naive {
                NaiveArg::Blind => NaiveMode::BlindPrediction,
                NaiveArg::Blend => NaiveMode::LinearBlend { lambda },
            };
            let targets = TradeoffParams::new(ProblemKind::Integral, lambda, bounds.theta())?;
            certify(|p| Policy::naive(&bounds, mode, p), &bounds, targets, args.prediction_grid, args.steps)?
        }
    };
    emit(&args.out, &(report.to_json() + "\n"))?;
    eprintln!(
        "consistency {:.6} (target {:.6}), robustness {:.6} (target {:.6})",
        report.measured_consistency, report.targets.eta, report.measured_robustness, report.targets.gamma
    );
    Ok(if args.naive.is_none() && !report.within_targets(1e-3) { Outcome::Violation } else { Outcome::Ok })
}

fn cmd_pareto(args: ParetoArgs) -> Result<Outcome, HarnessError> {
    let kind = ProblemKind::from(args.kind);
    let curve = pareto_frontier(args.theta, kind, args.grid)?;
    let mut out = String::from("lambda,gamma,eta,eta_lower_bound\n");
    for (k, (gamma, eta)) in curve.iter().enumerate() {
        let lambda = k as f64 / (args.grid - 1) as f64;
        let lb = match kind {
            ProblemKind::Integral => lb_consistency_max_search(*gamma, args.theta)?,
            ProblemKind::Fractional => lb_consistency_one_way(*gamma, args.theta)?,
        };
        out.push_str(&format!("{lambda},{gamma},{eta},{lb}\n"));
    }
    emit(&args.out, &out)?;
    Ok(Outcome::Ok)
}

fn cmd_threshold(args: ThresholdArgs) -> Result<Outcome, HarnessError> {
    let bounds = args.bounds.resolve()?;
    let phi = match ProblemKind::from(args.kind) {
        ProblemKind::Integral => {
            PiecewiseThreshold::constant(reservation_price(&bounds, args.lambda, args.prediction)?, bounds)?
        }
        ProblemKind::Fractional => one_way_design(&bounds, args.lambda, args.prediction)?.threshold,
    };
    let text = match args.format {
        Format::Json => phi.to_json() + "\n",
        Format::Csv => phi.to_csv(args.points),
    };
    emit(&args.out, &text)?;
    Ok(Outcome::Ok)
}

fn cmd_backtest(args: BacktestArgs) -> Result<Outcome, HarnessError> {
    let config = BacktestConfig {
        data_path: args.data,
        window_len: args.window,
        stride: args.stride,
        bounds: match (args.lower, args.upper) {
            (Some(lower), Some(upper)) => BoundsSpec::Fixed { lower, upper },
            _ => BoundsSpec::Derive,
        },
        error_level: args.error_level,
        crash_prob: args.crash_prob,
        seed: args.seed,
        kind: args.kind.into(),
        algorithms: args.algorithms.iter().map(|a| parse_algorithm(a)).collect::<Result<_, _>>()?,
        lambda_grid_size: args.grid,
    };
    let report = run_backtest(&config)?;
    emit(&args.out, &(report.to_json() + "\n"))?;
    if let Some(path) = &args.boxplot {
        fs::write(path, report.boxplot_csv())?;
    }
    Ok(Outcome::Ok)
}

fn cmd_verify(args: VerifyArgs) -> Result<Outcome, HarnessError> {
    let report = run_verify(args.theta)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(path) = &args.out {
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(if report.passed() { Outcome::Ok } else { Outcome::Violation })
}

fn cmd_synth(args: SynthArgs) -> Result<Outcome, HarnessError> {
    let cfg = WalkConfig {
        ticks: args.ticks,
        start: args.start,
        drift: args.drift,
        vol: args.vol,
        lower: args.lower,
        upper: args.upper,
        seed: args.seed,
        interval: args.interval,
    };
    let points = geometric_walk(&cfg)?;
    let mut buf = Vec::new();
    write_prices(&mut buf, &points)?;
    emit(&args.out, &String::from_utf8(buf).expect("csv output is utf-8"))?;
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Certify(a) => cmd_certify(a),
        Command::Pareto(a) => cmd_pareto(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Backtest(a) => cmd_backtest(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
