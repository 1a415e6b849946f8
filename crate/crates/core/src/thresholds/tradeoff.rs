//! Consistency/robustness targets `(η(λ), γ(λ))` for both problem kinds.

use serde::{Deserialize, Serialize};

use super::lambert::alpha_star;
use crate::error::{domain, Result};
use crate::market::ProblemKind;
use crate::scalar::Scalar;

/// Robustness parameter `λ` together with the consistency `η` and
/// robustness `γ` it targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffParams<T> {
    pub lambda: T,
    pub eta: T,
    pub gamma: T,
    pub kind: ProblemKind,
}

impl<T: Scalar> TradeoffParams<T> {
    pub fn new(kind: ProblemKind, lambda: T, theta: T) -> Result<Self> {
        match kind {
            ProblemKind::Integral => tradeoff_max_search(lambda, theta),
            ProblemKind::Fractional => tradeoff_one_way(lambda, theta),
        }
    }

    /// Largest violation of the defining identities for this kind.
    ///
    /// Integral: `ηγ = θ` and `η = λγ + 1 - λ`. Fractional: `η` equals the
    /// one-way consistency expression in `γ` and `γ = α* + (1-λ)(θ-α*)`.
    pub fn identity_residual(&self, theta: T) -> Result<T> {
        let one = T::one();
        let r = match self.kind {
            ProblemKind::Integral => {
                let a = (self.eta * self.gamma - theta).abs();
                let b = (self.eta - (self.lambda * self.gamma + one - self.lambda)).abs();
                a.max(b)
            }
            ProblemKind::Fractional => {
                let a = (self.eta - one_way_consistency(self.gamma, theta)).abs();
                let astar = alpha_star(theta)?;
                let b = (self.gamma - (astar + (one - self.lambda) * (theta - astar))).abs();
                a.max(b)
            }
        };
        Ok(r)
    }
}

fn check_inputs<T: Scalar>(lambda: T, theta: T) -> Result<()> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(domain(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if !(theta >= T::one()) || !theta.is_finite() {
        return Err(domain(format!("theta must be finite and >= 1, got {theta}")));
    }
    Ok(())
}

/// 1-max-search targets: `γ` is the positive root of `λγ² + (1-λ)γ - θ = 0`
/// and `η = θ / γ`.
///
/// The root is evaluated in its rationalised form
/// `2θ / (√((1-λ)² + 4λθ) + (1-λ))`, which equals the analytic limit
/// `γ = θ` at `λ = 0` and avoids cancellation for small `λ`.
pub fn tradeoff_max_search<T: Scalar>(lambda: T, theta: T) -> Result<TradeoffParams<T>> {
    check_inputs(lambda, theta)?;
    let one = T::one();
    let two = T::lit(2.0);
    let (eta, gamma) = if lambda == T::zero() {
        (one, theta)
    } else if lambda == one {
        let s = theta.sqrt();
        (s, s)
    } else {
        let mu = one - lambda;
        let gamma = two * theta / ((mu * mu + T::lit(4.0) * lambda * theta).sqrt() + mu);
        (theta / gamma, gamma)
    };
    Ok(TradeoffParams { lambda, eta, gamma, kind: ProblemKind::Integral })
}

/// One-way trading targets: `γ = α* + (1-λ)(θ-α*)` and `η` from
/// [`one_way_consistency`].
pub fn tradeoff_one_way<T: Scalar>(lambda: T, theta: T) -> Result<TradeoffParams<T>> {
    check_inputs(lambda, theta)?;
    let one = T::one();
    let astar = alpha_star(theta)?;
    let (eta, gamma) = if lambda == T::zero() {
        (one, theta)
    } else if lambda == one {
        (astar, astar)
    } else {
        let gamma = astar + (one - lambda) * (theta - astar);
        (one_way_consistency(gamma, theta), gamma)
    };
    Ok(TradeoffParams { lambda, eta, gamma, kind: ProblemKind::Fractional })
}

/// `θ / [θ/γ + (θ-1)(1 - ln((θ-1)/(γ-1)) / γ)]`, the best consistency a
/// `γ`-robust one-way trader can have.
pub fn one_way_consistency<T: Scalar>(gamma: T, theta: T) -> T {
    let one = T::one();
    if theta <= one || gamma <= one {
        return one;
    }
    let log = ((theta - one) / (gamma - one)).ln();
    theta / (theta / gamma + (theta - one) * (one - log / gamma))
}
