//! Online threshold-based algorithms for online conversion problems.
//!
//! Covers 1-max-search (integral) and one-way trading (fractional) with an
//! untrusted prediction of the maximum price: threshold construction,
//! execution, adversarial certification of consistency and robustness, and
//! online selection of the robustness parameter `λ`.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix it to `f64`, which is what the harness uses.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod learning;
pub mod market;
pub mod scalar;
pub mod thresholds;

pub use error::{Error, Result};
pub use market::{offline_opt, profit_ratio, validate_instance, ExecutionTrace, Instance, PriceBounds, ProblemKind};
pub use scalar::Scalar;

pub type PriceBounds64 = market::PriceBounds<f64>;
pub type Instance64 = market::Instance<f64>;
pub type ExecutionTrace64 = market::ExecutionTrace<f64>;
pub type PiecewiseThreshold64 = thresholds::PiecewiseThreshold<f64>;
pub type TradeoffParams64 = thresholds::TradeoffParams<f64>;
pub type Policy64 = engine::Policy<f64>;
pub type CertificateReport64 = analysis::CertificateReport<f64>;

pub type PriceBounds32 = market::PriceBounds<f32>;
pub type PiecewiseThreshold32 = thresholds::PiecewiseThreshold<f32>;
pub type Policy32 = engine::Policy<f32>;
