use std::fmt::Write as _;

use crate::error::{domain, Result};
use crate::market::ProblemKind;
use crate::scalar::Scalar;
use crate::thresholds::{alpha_star, slack, TradeoffParams};

fn check_range<T: Scalar>(gamma: T, lo: T, hi: T) -> Result<()> {
    let tol = slack::<T>() * hi;
    if gamma.is_finite() && gamma >= lo - tol && gamma <= hi + tol {
        Ok(())
    } else {
        Err(domain(format!("robustness {gamma} outside [{lo}, {hi}]")))
    }
}

/// Smallest consistency any `γ`-robust 1-max-search algorithm can have.
pub fn lb_consistency_max_search<T: Scalar>(gamma: T, theta: T) -> Result<T> {
    if !(theta >= T::one()) {
        return Err(domain(format!("fluctuation ratio {theta} below 1")));
    }
    check_range(gamma, theta.sqrt(), theta)?;
    Ok(theta / gamma)
}

/// Smallest consistency any `γ`-robust one-way trading algorithm can have.
///
/// Computed from the conversion-function argument with `L = 1`: the least
/// conversion `(1/γ) ln((u - 1)/(γ - 1))` on `[γ, θ]` has integral `I`, and
/// the consistency requirement `I ≤ (η - 1)θ/η` gives `η ≥ θ/(θ - I)`.
pub fn lb_consistency_one_way<T: Scalar>(gamma: T, theta: T) -> Result<T> {
    if !(theta > T::one()) {
        return Err(domain(format!("fluctuation ratio {theta} must exceed 1")));
    }
    check_range(gamma, alpha_star(theta)?, theta)?;
    let one = T::one();
    let gamma = gamma.min(theta);
    let (width, start) = (theta - one, gamma - one);
    let area = (width * (width / start).ln() - width + start) / gamma;
    Ok(theta / (theta - area))
}

/// `(γ(λ), η(λ))` for `grid_size` values of `λ` spread uniformly over `[0, 1]`.
pub fn pareto_frontier<T: Scalar>(theta: T, kind: ProblemKind, grid_size: usize) -> Result<Vec<(T, T)>> {
    if grid_size < 2 {
        return Err(domain(format!("grid size {grid_size} below 2")));
    }
    (0..grid_size)
        .map(|k| {
            let lambda = T::lit(k as f64 / (grid_size - 1) as f64);
            TradeoffParams::new(kind, lambda, theta).map(|t| (t.gamma, t.eta))
        })
        .collect()
}

fn interpolate<T: Scalar>(curve: &[(T, T)], x: T) -> T {
    let k = curve.partition_point(|c| c.0 < x).clamp(1, curve.len() - 1);
    let (a, b) = (curve[k - 1], curve[k]);
    if b.0 == a.0 {
        return b.1;
    }
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

/// Interior `γ` values where the `dominant` curve has larger `η` than the
/// `other` one, comparing linear interpolants at `samples` points spread
/// over the overlap of the two `γ` ranges.
pub fn dominance_violations<T: Scalar>(dominant: &[(T, T)], other: &[(T, T)], samples: usize) -> Vec<T> {
    let sorted = |c: &[(T, T)]| {
        let mut c = c.to_vec();
        c.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        c
    };
    let (d, o) = (sorted(dominant), sorted(other));
    if d.len() < 2 || o.len() < 2 {
        return Vec::new();
    }
    let lo = d[0].0.max(o[0].0);
    let hi = d[d.len() - 1].0.min(o[o.len() - 1].0);
    let tol = slack::<T>();
    (1..=samples)
        .map(|k| lo + (hi - lo) * T::lit(k as f64 / (samples + 1) as f64))
        .filter(|&g| interpolate(&d, g) > interpolate(&o, g) + tol)
        .collect()
}

/// Two-column CSV of a curve.
pub fn curve_csv<T: Scalar>(points: &[(T, T)], x: &str, y: &str) -> String {
    let mut out = format!("{x},{y}\n");
    for (a, b) in points {
        let _ = writeln!(out, "{a:e},{b:e}");
    }
    out
}
