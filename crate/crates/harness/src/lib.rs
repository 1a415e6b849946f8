//! Backtests, invariant sweeps and data plumbing around `ota-core`.

pub mod backtest;
pub mod data;
pub mod error;
pub mod experiment;
pub mod stats;
pub mod synth;
pub mod verify;

pub use backtest::{run_backtest, run_backtest_on, Algorithm, AlgorithmResult, BacktestConfig, BacktestReport, BoundsSpec};
pub use error::{HarnessError, Result};
