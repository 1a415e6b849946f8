//! Principal branch of the Lambert-W function and the optimal one-way ratio.

use crate::error::{domain, Result};
use crate::scalar::{eps, Scalar};

const MAX_ITER: usize = 50;

/// Principal branch `W0(x)`, the solution `w >= -1` of `w·e^w = x`.
///
/// Halley iteration started from `ln(1 + x)`, or from the branch-point
/// series when `x` is close to `-1/e`.
pub fn lambert_w<T: Scalar>(x: T) -> Result<T> {
    let e = T::E();
    let branch = -T::one() / e;
    if x.is_nan() || x < branch {
        return Err(domain(format!("lambert_w undefined for x = {x} < -1/e")));
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x == T::infinity() {
        return Ok(x);
    }

    let one = T::one();
    let two = T::lit(2.0);
    let mut w = if x < T::lit(-0.25) {
        let p = (two * (e * x + one)).max(T::zero()).sqrt();
        -one + p - p * p / T::lit(3.0) + T::lit(11.0 / 72.0) * p * p * p
    } else {
        x.ln_1p()
    };

    let tol = eps::<T>(64.0);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f == T::zero() {
            break;
        }
        let wp1 = w + one;
        if wp1 <= T::zero() {
            break;
        }
        let step = f / (ew * wp1 - (w + two) * f / (two * wp1));
        w = w - step;
        if step.abs() <= tol * (one + w.abs()) {
            break;
        }
    }
    Ok(w.max(-one))
}

/// Optimal competitive ratio of pure-online one-way trading,
/// `α* = 1 + W((θ - 1) / e)`.
pub fn alpha_star<T: Scalar>(theta: T) -> Result<T> {
    if theta.is_nan() || theta < T::one() {
        return Err(domain(format!("alpha_star needs theta >= 1, got {theta}")));
    }
    Ok(T::one() + lambert_w((theta - T::one()) / T::E())?)
}
