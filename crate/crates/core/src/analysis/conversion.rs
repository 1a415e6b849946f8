use rayon::prelude::*;

use super::instances::p_instance;
use crate::engine::{run_instance, Policy};
use crate::error::{domain, Result};
use crate::market::{PriceBounds, ProblemKind};
use crate::scalar::Scalar;

/// Relative slack of [`check_consistency_integral_constraint`].
const INTEGRAL_SLACK: f64 = 0.01;

/// `g(p)`: utilization reached before the compulsory step on the
/// `p`-instance of length `n`, for each `p` in `p_grid` (sorted).
pub fn conversion_function<T: Scalar>(policy: &Policy<T>, p_grid: &[T], n: usize) -> Result<Vec<(T, T)>> {
    if policy.kind() != ProblemKind::Fractional {
        return Err(domain("conversion functions are defined for one-way trading policies"));
    }
    let mut grid = p_grid.to_vec();
    if grid.iter().any(|p| !p.is_finite()) {
        return Err(domain("non-finite price in the peak grid"));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    grid.par_iter()
        .map(|&p| {
            let inst = p_instance(policy.bounds(), p, n)?;
            Ok((p, run_instance(policy, &inst)?.pre_compulsory_utilization()))
        })
        .collect()
}

/// Piecewise-linear interpolation of sorted samples, held constant outside.
fn interpolate<T: Scalar>(samples: &[(T, T)], x: T) -> T {
    let k = samples.partition_point(|s| s.0 < x);
    if k == 0 {
        return samples[0].1;
    }
    if k == samples.len() {
        return samples[k - 1].1;
    }
    let (a, b) = (samples[k - 1], samples[k]);
    if b.0 == a.0 {
        return b.1;
    }
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

/// Trapezoid integral of `g` over `[γL, U]` compared with `(η - 1)U/η`,
/// allowing 1% relative slack.
///
/// A sample at `U` itself is ignored when other samples exist: `g` jumps
/// to 1 there and a single point carries no area, but the trapezoid rule
/// would spread the jump over the last grid cell.
pub fn check_consistency_integral_constraint<T: Scalar>(
    g_samples: &[(T, T)],
    gamma: T,
    eta: T,
    bounds: &PriceBounds<T>,
) -> bool {
    if g_samples.is_empty() || g_samples.iter().any(|(p, g)| !p.is_finite() || !g.is_finite()) {
        return false;
    }
    let mut samples = g_samples.to_vec();
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    let (lo, hi) = (gamma * bounds.lower(), bounds.upper());
    if samples.iter().any(|s| s.0 < hi) {
        samples.retain(|s| s.0 < hi);
    }
    let mut xs = vec![lo];
    xs.extend(samples.iter().map(|s| s.0).filter(|&p| p > lo && p < hi));
    xs.push(hi);
    let area = xs.windows(2).fold(T::zero(), |acc, w| {
        acc + (w[1] - w[0]) * (interpolate(&samples, w[0]) + interpolate(&samples, w[1])) * T::lit(0.5)
    });
    let limit = (eta - T::one()) * hi / eta;
    area <= limit * (T::one() + T::lit(INTEGRAL_SLACK))
}
