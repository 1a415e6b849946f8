//! Backtests of `λ`-selection strategies over windows of a price series.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ota_core::learning::{alf_select, alf_update, arm_profits, argmax, lambda_grid, normalized_reward, regret, LearnerState, Regret};
use ota_core::{Instance64, PriceBounds64, ProblemKind};

use crate::data::{derive_bounds, load_prices, make_windows};
use crate::error::{HarnessError, Result};
use crate::experiment::{adjust_error, inject_crash, predict_prev_max, window_seed};
use crate::stats::BoxSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// `λ = 1`, predictions ignored.
    WorstCase,
    /// Best grid `λ` for each window in hindsight.
    OfflineBest,
    /// Exponentially weighted forecaster over the grid.
    Alf,
    /// Single grid `λ` with the largest total profit in hindsight.
    BestStatic,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::WorstCase, Algorithm::OfflineBest, Algorithm::Alf, Algorithm::BestStatic];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::WorstCase => "worst_case",
            Algorithm::OfflineBest => "offline_best",
            Algorithm::Alf => "alf",
            Algorithm::BestStatic => "best_static",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum BoundsSpec {
    Fixed { lower: f64, upper: f64 },
    /// `[0.95 min, 1.05 max]` of the whole series.
    Derive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub data_path: PathBuf,
    pub window_len: usize,
    pub stride: usize,
    pub bounds: BoundsSpec,
    pub error_level: f64,
    pub crash_prob: f64,
    pub seed: u64,
    pub kind: ProblemKind,
    pub algorithms: Vec<Algorithm>,
    pub lambda_grid_size: usize,
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.window_len < 2 || self.stride < 1 {
            return bad(format!("window {} / stride {}", self.window_len, self.stride));
        }
        if !(0.0..=1.0).contains(&self.error_level) || !(0.0..=1.0).contains(&self.crash_prob) {
            return bad("error level and crash probability must lie in [0, 1]".into());
        }
        if self.lambda_grid_size < 2 {
            return bad("lambda grid needs at least 2 points".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms selected".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    /// `OPT / ALG` per evaluated window.
    pub ratios: Vec<f64>,
    pub profits: Vec<f64>,
    /// `λ` used in each window.
    pub lambdas: Vec<f64>,
    pub summary: BoxSummary,
    /// Running mean of `(profit - L)/(U - L)`.
    pub cumulative_normalized_profit: Vec<f64>,
}

impl AlgorithmResult {
    pub fn final_normalized_profit(&self) -> f64 {
        self.cumulative_normalized_profit.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub bounds: PriceBounds64,
    pub windows_total: usize,
    pub windows_evaluated: usize,
    pub predictions: Vec<f64>,
    pub peaks: Vec<f64>,
    pub results: Vec<AlgorithmResult>,
    /// Present when `alf` ran.
    pub regret: Option<Regret>,
    pub regret_average_curve: Vec<f64>,
}

impl BacktestReport {
    pub fn result(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.results.iter().find(|r| r.algorithm == algorithm)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    /// One five-number row per algorithm.
    pub fn boxplot_csv(&self) -> String {
        let mut out = String::from("algorithm,min,lower_whisker,q1,median,q3,upper_whisker,max,mean\n");
        for r in &self.results {
            let s = &r.summary;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.algorithm.name(),
                s.min,
                s.lower_whisker,
                s.q1,
                s.median,
                s.q3,
                s.upper_whisker,
                s.max,
                s.mean
            );
        }
        out
    }
}

pub fn run_backtest(config: &BacktestConfig) -> Result<BacktestReport> {
    config.validate()?;
    let prices: Vec<f64> = load_prices(&config.data_path)?.into_iter().map(|p| p.price).collect();
    run_backtest_on(&prices, config)
}

/// Backtest on an in-memory series; `config.data_path` is only echoed.
pub fn run_backtest_on(prices: &[f64], config: &BacktestConfig) -> Result<BacktestReport> {
    config.validate()?;
    let bounds = match config.bounds {
        BoundsSpec::Derive => derive_bounds(prices)?,
        BoundsSpec::Fixed { lower, upper } => {
            let b = PriceBounds64::new(lower, upper)?;
            if let Some(p) = prices.iter().find(|p| !b.contains(**p)) {
                return Err(HarnessError::Config(format!("price {p} outside the fixed bounds [{lower}, {upper}]")));
            }
            b
        }
    };
    let windows = make_windows(prices, config.window_len, config.stride)?;
    let previous = predict_prev_max(&windows, &bounds)?;

    let mut instances: Vec<Instance64> = Vec::with_capacity(previous.len());
    let mut predictions = Vec::with_capacity(previous.len());
    let mut peaks = Vec::with_capacity(previous.len());
    for (i, (window, &prev)) in windows.iter().skip(1).zip(&previous).enumerate() {
        let inst = inject_crash(window.clone(), config.crash_prob, window_seed(config.seed, i + 1), &bounds);
        let peak = inst.max_price().expect("windows are non-empty");
        predictions.push(adjust_error(prev, peak, config.error_level, &bounds));
        peaks.push(peak);
        instances.push(inst);
    }

    let grid = lambda_grid(config.lambda_grid_size)?;
    let profits: Vec<Vec<f64>> = instances
        .par_iter()
        .zip(&predictions)
        .map(|(inst, &p)| arm_profits(inst, p, &bounds, config.kind, &grid))
        .collect::<std::result::Result<_, _>>()?;

    let mut selected = config.algorithms.clone();
    selected.sort();
    selected.dedup();
    let mut results = Vec::with_capacity(selected.len());
    let mut learner_regret = None;
    let mut regret_average_curve = Vec::new();
    for algorithm in selected {
        let arms: Vec<usize> = match algorithm {
            Algorithm::WorstCase => vec![grid.len() - 1; profits.len()],
            Algorithm::OfflineBest => profits.iter().map(|row| argmax(row)).collect(),
            Algorithm::BestStatic => {
                let totals: Vec<f64> = (0..grid.len()).map(|k| profits.iter().map(|row| row[k]).sum()).collect();
                vec![argmax(&totals); profits.len()]
            }
            Algorithm::Alf => {
                let mut state = LearnerState::new(grid.clone(), config.seed)?;
                let mut arms = Vec::with_capacity(profits.len());
                for row in &profits {
                    let (lambda, next) = alf_select(state);
                    arms.push(grid.iter().position(|&l| l == lambda).expect("λ comes from the grid"));
                    let rewards: Vec<f64> = row.iter().map(|&p| normalized_reward(p, &bounds)).collect();
                    state = alf_update(next, &rewards)?;
                }
                let r = regret(state.history());
                regret_average_curve =
                    r.per_round.iter().enumerate().map(|(t, v)| v / (t + 1) as f64).collect();
                learner_regret = Some(r);
                arms
            }
        };
        results.push(summarize(algorithm, &arms, &profits, &peaks, &grid, &bounds)?);
    }

    Ok(BacktestReport {
        config: config.clone(),
        bounds,
        windows_total: windows.len(),
        windows_evaluated: instances.len(),
        predictions,
        peaks,
        results,
        regret: learner_regret,
        regret_average_curve,
    })
}

fn summarize(
    algorithm: Algorithm,
    arms: &[usize],
    profits: &[Vec<f64>],
    peaks: &[f64],
    grid: &[f64],
    bounds: &PriceBounds64,
) -> Result<AlgorithmResult> {
    let chosen: Vec<f64> = arms.iter().zip(profits).map(|(&k, row)| row[k]).collect();
    let ratios: Vec<f64> = peaks
        .iter()
        .zip(&chosen)
        .map(|(&opt, &alg)| ota_core::profit_ratio(opt, alg))
        .collect::<std::result::Result<_, _>>()?;
    let mut running = 0.0;
    let cumulative_normalized_profit = chosen
        .iter()
        .enumerate()
        .map(|(t, &p)| {
            running += normalized_reward(p, bounds);
            running / (t + 1) as f64
        })
        .collect();
    let summary = BoxSummary::from_samples(&ratios).ok_or_else(|| HarnessError::Config("no evaluated windows".into()))?;
    Ok(AlgorithmResult {
        algorithm,
        ratios,
        profits: chosen,
        lambdas: arms.iter().map(|&k| grid[k]).collect(),
        summary,
        cumulative_normalized_profit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: ProblemKind) -> BacktestConfig {
        BacktestConfig {
            data_path: PathBuf::from("memory"),
            window_len: 20,
            stride: 10,
            bounds: BoundsSpec::Derive,
            error_level: 1.0,
            crash_prob: 0.0,
            seed: 0,
            kind,
            algorithms: Algorithm::ALL.to_vec(),
            lambda_grid_size: 9,
        }
    }

    #[test]
    fn constant_prices_give_unit_ratios() {
        let prices = vec![5.0; 200];
        for kind in [ProblemKind::Integral, ProblemKind::Fractional] {
            let report = run_backtest_on(&prices, &config(kind)).unwrap();
            assert_eq!(report.windows_total, 19);
            assert_eq!(report.windows_evaluated, 18);
            for r in &report.results {
                assert!(r.ratios.iter().all(|&x| (x - 1.0).abs() < 1e-12), "{:?}", r.algorithm);
            }
        }
    }

    #[test]
    fn crashes_hurt_the_worst_case_policy() {
        // every window ends on a crash and stays below √(LU)
        let mut prices = Vec::new();
        for k in 0..30 {
            prices.extend([3.0, 3.5 + 0.01 * k as f64, 3.2, 3.0]);
        }
        prices.push(10.0);
        let cfg = BacktestConfig {
            window_len: 4,
            stride: 4,
            bounds: BoundsSpec::Fixed { lower: 2.0, upper: 10.0 },
            crash_prob: 1.0,
            kind: ProblemKind::Integral,
            ..config(ProblemKind::Integral)
        };
        let report = run_backtest_on(&prices, &cfg).unwrap();
        let wc = report.result(Algorithm::WorstCase).unwrap();
        for (r, v) in wc.ratios.iter().zip(&report.peaks) {
            assert!((r - v / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn config_errors() {
        let mut cfg = config(ProblemKind::Integral);
        cfg.error_level = 1.5;
        assert!(run_backtest_on(&[1.0; 50], &cfg).is_err());
        let cfg = BacktestConfig { bounds: BoundsSpec::Fixed { lower: 2.0, upper: 3.0 }, ..config(ProblemKind::Integral) };
        assert!(run_backtest_on(&[5.0; 50], &cfg).is_err());
        let cfg = BacktestConfig { window_len: 40, stride: 40, ..config(ProblemKind::Integral) };
        assert!(matches!(run_backtest_on(&[5.0; 50], &cfg), Err(HarnessError::TooFewWindows(1))));
    }

    #[test]
    fn boxplot_rows() {
        let report = run_backtest_on(&[5.0; 100], &config(ProblemKind::Integral)).unwrap();
        let csv = report.boxplot_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains("\nworst_case,1,1,1,1,1,1,1,1\n"));
    }
}
