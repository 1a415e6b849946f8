//! Reservation prices for 1-max-search.

use serde::{Deserialize, Serialize};

use super::tradeoff::tradeoff_max_search;
use crate::error::Result;
use crate::market::PriceBounds;
use crate::scalar::Scalar;

/// `Φ = √(LU)`, the optimal prediction-free reservation price.
pub fn pure_reservation_max_search<T: Scalar>(bounds: &PriceBounds<T>) -> T {
    (bounds.lower() * bounds.upper()).sqrt()
}

/// Prediction-aware reservation price.
///
/// With `(η, γ)` from [`tradeoff_max_search`]:
/// `Lη` for `P < Lη`, `λLγ + (1-λ)P/η` for `Lη <= P < Lγ`, and `Lγ`
/// for `P >= Lγ`.
pub fn reservation_price<T: Scalar>(bounds: &PriceBounds<T>, lambda: T, prediction: T) -> Result<T> {
    bounds.check_prediction(prediction)?;
    let params = tradeoff_max_search(lambda, bounds.theta())?;
    let l = bounds.lower();
    let (low, high) = (l * params.eta, l * params.gamma);
    let phi = if prediction < low {
        low
    } else if prediction < high {
        lambda * high + (T::one() - lambda) * prediction / params.eta
    } else {
        high
    };
    Ok(bounds.clamp(phi))
}

/// Warm-up baselines that use the prediction naively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum NaiveMode<T> {
    /// `Φ = P`.
    BlindPrediction,
    /// `Φ = λ√(LU) + (1-λ)P`.
    LinearBlend { lambda: T },
}

pub fn naive_reservation_price<T: Scalar>(bounds: &PriceBounds<T>, mode: NaiveMode<T>, prediction: T) -> Result<T> {
    bounds.check_prediction(prediction)?;
    Ok(match mode {
        NaiveMode::BlindPrediction => prediction,
        NaiveMode::LinearBlend { lambda } => {
            bounds.clamp(lambda * pure_reservation_max_search(bounds) + (T::one() - lambda) * prediction)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_relative_eq;

    fn b() -> PriceBounds<f64> {
        PriceBounds::new(2.0, 10.0).unwrap()
    }

    // (γ, η) at λ = 0.5, θ = 5 from the quadratic λγ² + (1-λ)γ - θ = 0.
    const GAMMA: f64 = 2.701_562_118_716_424_3;
    const ETA: f64 = 1.850_781_059_358_212_2;

    #[test]
    fn pure_reservation() {
        assert_relative_eq!(pure_reservation_max_search(&b()), 20f64.sqrt());
        assert_eq!(pure_reservation_max_search(&PriceBounds::new(3.0, 3.0).unwrap()), 3.0);
        assert_eq!(pure_reservation_max_search(&PriceBounds::new(1.0, 4.0).unwrap()), 2.0);
    }

    #[test]
    fn three_branches() {
        assert_relative_eq!(reservation_price(&b(), 0.5, 3.0).unwrap(), 2.0 * ETA, epsilon = 1e-13);
        let mid = 0.5 * 2.0 * GAMMA + 0.5 * 4.0 / ETA;
        assert_relative_eq!(reservation_price(&b(), 0.5, 4.0).unwrap(), mid, epsilon = 1e-13);
        assert_relative_eq!(mid, 3.782_19, epsilon = 1e-5);
        assert_relative_eq!(reservation_price(&b(), 0.5, 8.0).unwrap(), 2.0 * GAMMA, epsilon = 1e-13);
    }

    #[test]
    fn middle_branch_never_exceeds_prediction() {
        for i in 0..=1000 {
            let p = 2.0 + 8.0 * i as f64 / 1000.0;
            for &lambda in &[0.1, 0.5, 0.9] {
                let params = tradeoff_max_search(lambda, 5.0).unwrap();
                let phi = reservation_price(&b(), lambda, p).unwrap();
                assert!(phi >= 2.0 * params.eta - 1e-12 && phi <= 2.0 * params.gamma + 1e-12);
                if p >= 2.0 * params.eta && p < 2.0 * params.gamma {
                    assert!(p >= phi - 1e-12, "P={p} Φ={phi}");
                }
            }
        }
    }

    #[test]
    fn worst_case_lambda_ignores_prediction() {
        for &p in &[2.0, 4.0, 7.5, 10.0] {
            assert_relative_eq!(reservation_price(&b(), 1.0, p).unwrap(), 20f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn naive_baselines() {
        assert_eq!(naive_reservation_price(&b(), NaiveMode::BlindPrediction, 7.0).unwrap(), 7.0);
        for &p in &[2.0, 6.0, 10.0] {
            let phi = naive_reservation_price(&b(), NaiveMode::LinearBlend { lambda: 1.0 }, p).unwrap();
            assert_relative_eq!(phi, 20f64.sqrt(), epsilon = 1e-14);
        }
        let phi = naive_reservation_price(&b(), NaiveMode::LinearBlend { lambda: 0.5 }, 10.0).unwrap();
        assert_relative_eq!(phi, 0.5 * 20f64.sqrt() + 5.0, epsilon = 1e-14);
    }

    #[test]
    fn prediction_out_of_bounds() {
        assert_eq!(reservation_price(&b(), 0.5, 11.0).unwrap_err(), Error::PredictionOutOfBounds(11.0));
        assert!(naive_reservation_price(&b(), NaiveMode::BlindPrediction, 1.0).is_err());
    }
}
