//! Seeded synthetic price series.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::PricePoint;
use crate::error::{HarnessError, Result};

/// Geometric random walk clipped to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub ticks: usize,
    pub start: f64,
    /// Per-tick log drift.
    pub drift: f64,
    /// Per-tick log volatility.
    pub vol: f64,
    pub lower: f64,
    pub upper: f64,
    pub seed: u64,
    /// Seconds between ticks.
    pub interval: i64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { ticks: 10_000, start: 100.0, drift: 0.0, vol: 0.01, lower: 50.0, upper: 200.0, seed: 0, interval: 300 }
    }
}

pub fn geometric_walk(cfg: &WalkConfig) -> Result<Vec<PricePoint>> {
    if !(cfg.lower > 0.0 && cfg.lower <= cfg.upper) || !(cfg.vol >= 0.0) || !cfg.drift.is_finite() {
        return Err(HarnessError::Config(format!(
            "walk needs 0 < lower <= upper and vol >= 0, got lower={} upper={} vol={}",
            cfg.lower, cfg.upper, cfg.vol
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut price = cfg.start.clamp(cfg.lower, cfg.upper);
    let mut out = Vec::with_capacity(cfg.ticks);
    for k in 0..cfg.ticks {
        out.push(PricePoint { timestamp: k as i64 * cfg.interval, price });
        let z: f64 = StandardNormal.sample(&mut rng);
        price = (price * (cfg.drift - 0.5 * cfg.vol * cfg.vol + cfg.vol * z).exp()).clamp(cfg.lower, cfg.upper);
    }
    Ok(out)
}
