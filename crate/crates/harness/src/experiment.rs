//! Predictions, prediction error and crash injection for backtests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ota_core::{Instance64, PriceBounds64};

use crate::error::{HarnessError, Result};

/// Prediction for window `i` is the maximum of window `i - 1`, clamped
/// into the bounds. Returns one prediction per window after the first.
pub fn predict_prev_max(windows: &[Instance64], bounds: &PriceBounds64) -> Result<Vec<f64>> {
    if windows.len() < 2 {
        return Err(HarnessError::TooFewWindows(windows.len()));
    }
    windows[..windows.len() - 1]
        .iter()
        .map(|w| {
            w.max_price()
                .map(|p| bounds.clamp(p))
                .ok_or_else(|| HarnessError::Config("empty window".into()))
        })
        .collect()
}

/// `clamp(V + (P - V)·level)`: level 0 is a perfect prediction, level 1
/// leaves `P` as it was.
pub fn adjust_error(prediction: f64, peak: f64, level: f64, bounds: &PriceBounds64) -> f64 {
    bounds.clamp(peak + (prediction - peak) * level)
}

/// With probability `q` the last price is replaced by `L`.
pub fn inject_crash(inst: Instance64, q: f64, seed: u64, bounds: &PriceBounds64) -> Instance64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if q <= 0.0 || !rng.random_bool(q.min(1.0)) {
        return inst;
    }
    let mut prices = inst.into_prices();
    if let Some(last) = prices.last_mut() {
        *last = bounds.lower();
    }
    Instance64::new(prices)
}

/// Independent seed for window `index` of a run seeded with `seed`.
pub fn window_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.random()
}
