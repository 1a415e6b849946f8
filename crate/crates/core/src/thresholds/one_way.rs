//! Prediction-aware threshold functions for one-way trading.
//!
//! For a prediction below the boundary price `M` the threshold is an
//! `η`-rate exponential up to `M` followed by a `γ`-rate exponential ending
//! at `U`. Otherwise it has up to four pieces: a `γ`-rate exponential up to
//! `M1`, a flat reservation at `M1`, an `η`-rate exponential reaching the
//! prediction at `β2`, and a final `γ`-rate exponential ending at `U`.

use serde::{Deserialize, Serialize};

use super::lambert::alpha_star;
use super::piecewise::{slack, PiecewiseThreshold, ThresholdSegment};
use super::tradeoff::{tradeoff_one_way, TradeoffParams};
use crate::error::{domain, Error, Result};
use crate::market::PriceBounds;
use crate::scalar::{eps, Scalar};

const BISECTION_STEPS: usize = 200;

/// Prediction-free optimal threshold `L + (α* - 1)L·exp(α* w)`.
pub fn pure_threshold_one_way<T: Scalar>(bounds: &PriceBounds<T>) -> Result<PiecewiseThreshold<T>> {
    let l = bounds.lower();
    let a = alpha_star(bounds.theta())?;
    PiecewiseThreshold::new(
        vec![ThresholdSegment::exp(T::zero(), T::one(), l, (a - T::one()) * l, a, T::zero())],
        *bounds,
    )
}

/// Junction `(M, β)` between the `η`-rate and `γ`-rate pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundaryBreakpoints<T> {
    pub m: T,
    pub beta: T,
}

impl<T: Scalar> BoundaryBreakpoints<T> {
    /// `[M - L - (ηL - L)e^{ηβ},  Mγ/η - L - (U - L)e^{γ(β-1)}]`.
    pub fn residuals(&self, bounds: &PriceBounds<T>, eta: T, gamma: T) -> [T; 2] {
        let (l, u) = (bounds.lower(), bounds.upper());
        [
            self.m - l - (eta * l - l) * (eta * self.beta).exp(),
            self.m * gamma / eta - l - (u - l) * (gamma * (self.beta - T::one())).exp(),
        ]
    }
}

/// Prediction-dependent breakpoints `(M1, β1, β1', β2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IntermediateBreakpoints<T> {
    pub m1: T,
    pub beta1: T,
    pub beta1_prime: T,
    pub beta2: T,
}

impl<T: Scalar> IntermediateBreakpoints<T> {
    /// Residuals of the four defining equations, each evaluated directly
    /// from the stored values:
    ///
    /// 1. `β1 - ln((max{M1/L, γ} - 1)/(γ - 1)) / γ`
    /// 2. `M1/η - [∫_0^{β1} φ + (β1' - β1)M1 + (1 - β1')L]`
    /// 3. `P - L - (M1 - L)e^{η(β2 - β1')}`
    /// 4. `β2 - 1 - ln((min{Pγ/η, U} - L)/(U - L)) / γ`
    pub fn residuals(&self, bounds: &PriceBounds<T>, eta: T, gamma: T, prediction: T) -> [T; 4] {
        let (l, u) = (bounds.lower(), bounds.upper());
        let one = T::one();
        let r1 = if gamma > one {
            self.beta1 - (((self.m1 / l).max(gamma) - one) / (gamma - one)).ln() / gamma
        } else {
            self.beta1
        };
        // ∫_0^{β1} L + (γL - L)e^{γu} du
        let head = l * self.beta1 + (gamma * l - l) / gamma * (gamma * self.beta1).exp_m1();
        let r2 = self.m1 / eta
            - (head + (self.beta1_prime - self.beta1) * self.m1 + (one - self.beta1_prime) * l);
        let r3 = prediction - l - (self.m1 - l) * (eta * (self.beta2 - self.beta1_prime)).exp();
        let r4 = self.beta2 - one - (((prediction * gamma / eta).min(u) - l) / (u - l)).ln() / gamma;
        [r1, r2, r3, r4]
    }
}

fn is_one<T: Scalar>(x: T) -> bool {
    (x - T::one()).abs() <= eps(64.0)
}

fn degenerate_pair<T: Scalar>(eta: T, gamma: T) -> bool {
    (gamma - eta).abs() <= eps::<T>(64.0) * gamma
}

/// Bisection for a sign change of `f` on `[lo, hi]`, `f(lo) <= 0 <= f(hi)`
/// or the reverse.
fn bisect<T: Scalar>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let lo_negative = f(lo) < T::zero();
    let half = T::lit(0.5);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < T::zero()) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * half
}

/// Solves for the junction `(M, β)` of the `η`-rate piece starting at `ηL`
/// and the `γ`-rate piece ending at `U`, where the jump ratio is `γ/η`.
///
/// `M` is eliminated with the first equation and the second is bisected in
/// `β ∈ [0, 1]`. When `η = 1` the answer is `(L, 1)`; when `η = γ` every `β`
/// solves the system and `β = 0` is returned.
pub fn boundary_breakpoints<T: Scalar>(bounds: &PriceBounds<T>, eta: T, gamma: T) -> Result<BoundaryBreakpoints<T>> {
    let (l, u) = (bounds.lower(), bounds.upper());
    if !(eta >= T::one() && gamma >= eta) {
        return Err(domain(format!("need 1 <= eta <= gamma, got eta={eta}, gamma={gamma}")));
    }
    if is_one(eta) {
        return Ok(BoundaryBreakpoints { m: l, beta: T::one() });
    }
    if degenerate_pair(eta, gamma) {
        return Ok(BoundaryBreakpoints { m: eta * l, beta: T::zero() });
    }
    let m_of = |beta: T| l + (eta * l - l) * (eta * beta).exp();
    let f = |beta: T| m_of(beta) * gamma / eta - l - (u - l) * (gamma * (beta - T::one())).exp();
    let (f0, f1) = (f(T::zero()), f(T::one()));
    let tol = slack::<T>() * u;
    let beta = if f1 == T::zero() || (f1.abs() <= tol && f0 > T::zero()) {
        T::one()
    } else if f0 == T::zero() {
        T::zero()
    } else if (f0 < T::zero()) != (f1 < T::zero()) {
        bisect(f, T::zero(), T::one())
    } else {
        return Err(Error::NoRoot(format!("f(0)={f0}, f(1)={f1} for eta={eta}, gamma={gamma}")));
    };
    let out = BoundaryBreakpoints { m: m_of(beta), beta };
    let worst = out.residuals(bounds, eta, gamma).iter().fold(T::zero(), |a, r| a.max(r.abs()));
    if worst > tol {
        return Err(Error::NoRoot(format!("boundary residual {worst} after bisection")));
    }
    Ok(out)
}

/// `(β1, β1', β2)` implied by a candidate `M1`, and the mismatch of the
/// remaining equation `P = L + (M1 - L)e^{η(β2 - β1')}`.
fn cascade<T: Scalar>(bounds: &PriceBounds<T>, eta: T, gamma: T, prediction: T, m1: T) -> (T, T, T, T) {
    let (l, u) = (bounds.lower(), bounds.upper());
    let one = T::one();
    let top = (m1 / l).max(gamma);
    let beta1 = if gamma > one { ((top - one) / (gamma - one)).ln() / gamma } else { T::zero() };
    let head = l * beta1 + (top - gamma) * l / gamma;
    let beta1_prime = if m1 - l > eps::<T>(16.0) * u {
        (m1 / eta - head + beta1 * m1 - l) / (m1 - l)
    } else {
        one
    };
    let beta2 = one + (((prediction * gamma / eta).min(u) - l) / (u - l)).ln() / gamma;
    let mismatch = l + (m1 - l) * (eta * (beta2 - beta1_prime)).exp() - prediction;
    (beta1, beta1_prime, beta2, mismatch)
}

/// Solves for `(M1, β1, β1', β2)` given a prediction `P ∈ [M, U]`.
///
/// Outer bisection on `M1 ∈ [ηL, P]`; for each candidate the first, second
/// and fourth equations give `β1`, `β1'` and `β2` in closed form and the
/// third equation is the root condition. Near `P = M` the solution lies
/// below `M` (it starts at `ηL` for `P = M`), so the bracket begins at `ηL`.
pub fn intermediate_breakpoints<T: Scalar>(
    bounds: &PriceBounds<T>,
    eta: T,
    gamma: T,
    prediction: T,
) -> Result<IntermediateBreakpoints<T>> {
    bounds.check_prediction(prediction)?;
    let (l, u) = (bounds.lower(), bounds.upper());
    let one = T::one();
    let boundary = boundary_breakpoints(bounds, eta, gamma)?;
    let tol = slack::<T>() * u;
    if prediction < boundary.m - tol {
        return Err(domain(format!("prediction {prediction} below boundary price {}", boundary.m)));
    }

    if prediction == u {
        let beta1 = if gamma > one { ((u / l - one) / (gamma - one)).ln() / gamma } else { T::zero() };
        return Ok(IntermediateBreakpoints { m1: u, beta1: beta1.min(one), beta1_prime: one, beta2: one });
    }

    let m1 = if degenerate_pair(eta, gamma) || is_one(eta) {
        prediction
    } else {
        let h = |m1: T| cascade(bounds, eta, gamma, prediction, m1).3;
        let lo = (eta * l).min(prediction);
        let (h_lo, h_hi) = (h(lo), h(prediction));
        if h_hi < -tol {
            return Err(Error::NoRoot(format!("M1 bracket top residual {h_hi} at P={prediction}")));
        }
        if h_lo >= T::zero() {
            if h_lo > tol {
                return Err(Error::NoRoot(format!("M1 bracket bottom residual {h_lo} at P={prediction}")));
            }
            lo
        } else if h_hi <= T::zero() {
            prediction
        } else {
            bisect(h, lo, prediction)
        }
    };

    let (beta1, beta1_prime, beta2, _) = cascade(bounds, eta, gamma, prediction, m1);
    let ordered = [T::zero(), beta1, beta1_prime, beta2, one];
    let ord_tol = slack::<T>();
    for pair in ordered.windows(2) {
        if pair[1] < pair[0] - ord_tol {
            return Err(Error::OrderingViolation(format!(
                "0 <= β1={beta1} <= β1'={beta1_prime} <= β2={beta2} <= 1 fails at P={prediction}"
            )));
        }
    }
    let beta1 = beta1.max(T::zero()).min(one);
    let beta1_prime = beta1_prime.max(beta1).min(one);
    let beta2 = beta2.max(beta1_prime).min(one);
    Ok(IntermediateBreakpoints { m1, beta1, beta1_prime, beta2 })
}

/// Threshold together with the quantities it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OneWayDesign<T> {
    pub params: TradeoffParams<T>,
    pub prediction: T,
    pub boundary: BoundaryBreakpoints<T>,
    /// Present when the prediction is at least `M`.
    pub intermediate: Option<IntermediateBreakpoints<T>>,
    pub threshold: PiecewiseThreshold<T>,
}

/// Builds the prediction-aware one-way threshold and its breakpoints.
pub fn one_way_design<T: Scalar>(bounds: &PriceBounds<T>, lambda: T, prediction: T) -> Result<OneWayDesign<T>> {
    bounds.check_prediction(prediction)?;
    let params = tradeoff_one_way(lambda, bounds.theta())?;
    let (l, u) = (bounds.lower(), bounds.upper());
    let (zero, one) = (T::zero(), T::one());
    let (eta, gamma) = (params.eta, params.gamma);

    if bounds.theta() == one {
        return Ok(OneWayDesign {
            params,
            prediction,
            boundary: BoundaryBreakpoints { m: l, beta: one },
            intermediate: None,
            threshold: PiecewiseThreshold::constant(l, *bounds)?,
        });
    }

    let boundary = boundary_breakpoints(bounds, eta, gamma)?;
    let (segments, intermediate) = if prediction < boundary.m {
        let beta = boundary.beta;
        (
            vec![
                ThresholdSegment::exp(zero, beta, l, eta * l - l, eta, zero),
                ThresholdSegment::exp(beta, one, l, u - l, gamma, one),
            ],
            None,
        )
    } else {
        let ib = intermediate_breakpoints(bounds, eta, gamma, prediction)?;
        (
            vec![
                ThresholdSegment::exp(zero, ib.beta1, l, gamma * l - l, gamma, zero),
                ThresholdSegment::flat(ib.beta1, ib.beta1_prime, ib.m1),
                ThresholdSegment::exp(ib.beta1_prime, ib.beta2, l, ib.m1 - l, eta, ib.beta1_prime),
                ThresholdSegment::exp(ib.beta2, one, l, u - l, gamma, one),
            ],
            Some(ib),
        )
    };
    let threshold = PiecewiseThreshold::new(segments, *bounds)?;
    Ok(OneWayDesign { params, prediction, boundary, intermediate, threshold })
}

/// Prediction-aware one-way threshold for robustness parameter `λ`.
pub fn build_threshold_one_way<T: Scalar>(
    bounds: &PriceBounds<T>,
    lambda: T,
    prediction: T,
) -> Result<PiecewiseThreshold<T>> {
    one_way_design(bounds, lambda, prediction).map(|d| d.threshold)
}
