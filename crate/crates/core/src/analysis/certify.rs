use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::instances::{constant_instance, p_instance, spike_instance};
use crate::engine::{run_instance, Policy};
use crate::error::{domain, Result};
use crate::market::{PriceBounds, ProblemKind};
use crate::scalar::Scalar;
use crate::thresholds::{boundary_breakpoints, TradeoffParams};

/// Number of `ξ` values reported in [`CertificateReport::kappa_curve`].
const KAPPA_POINTS: usize = 21;
/// Peak grid used by [`empirical_kappa`].
const KAPPA_PEAKS: usize = 401;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KappaPoint<T> {
    pub xi: T,
    pub kappa: T,
}

/// The `(P, p)` pair attaining a reported metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WorstCase<T> {
    pub prediction: T,
    pub peak: T,
    pub ratio: T,
}

/// Measured consistency, robustness and `κ(ξ)` of a prediction-aware policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CertificateReport<T> {
    pub measured_consistency: T,
    pub measured_robustness: T,
    pub kappa_curve: Vec<KappaPoint<T>>,
    /// Keyed by `"consistency"` and `"robustness"`.
    pub worst_instances: BTreeMap<String, WorstCase<T>>,
    pub targets: TradeoffParams<T>,
}

impl<T: Scalar> CertificateReport<T> {
    /// Both measurements within `(1 + tol)` of their targets.
    pub fn within_targets(&self, tol: T) -> bool {
        let one = T::one();
        self.measured_consistency <= self.targets.eta * (one + tol)
            && self.measured_robustness <= self.targets.gamma * (one + tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

fn tiny<T: Scalar>(bounds: &PriceBounds<T>) -> T {
    T::lit(1e-9) * bounds.upper()
}

/// Worst profit ratio of `policy` over the `p`-instance, the constant-`p`
/// instance and the single spike to `p`.
pub fn adversarial_ratio<T: Scalar>(policy: &Policy<T>, p: T, n: usize) -> Result<T> {
    let bounds = policy.bounds();
    let shapes = [p_instance(bounds, p, n)?, constant_instance(bounds, p, n)?, spike_instance(bounds, p)?];
    let mut worst = T::one();
    for inst in &shapes {
        let trace = run_instance(policy, inst)?;
        worst = worst.max(p / trace.profit);
    }
    Ok(worst)
}

fn uniform<T: Scalar>(bounds: &PriceBounds<T>, points: usize) -> Vec<T> {
    let (l, u) = (bounds.lower(), bounds.upper());
    let last = (points.max(2) - 1) as f64;
    (0..points.max(2)).map(|k| l + (u - l) * T::lit(k as f64 / last)).collect()
}

fn with_neighbours<T: Scalar>(out: &mut Vec<T>, x: T, step: T) {
    out.extend([x, x - step, x + step]);
}

fn tidy<T: Scalar>(bounds: &PriceBounds<T>, mut xs: Vec<T>) -> Vec<T> {
    xs.retain(|x| x.is_finite());
    for x in xs.iter_mut() {
        *x = bounds.clamp(*x);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    xs.dedup();
    xs
}

struct Record<T> {
    prediction: T,
    peak: T,
    ratio: T,
}

fn argmax<'a, T: Scalar>(records: impl Iterator<Item = &'a Record<T>>) -> Option<&'a Record<T>> {
    records.fold(None, |best: Option<&Record<T>>, r| match best {
        Some(b) if b.ratio >= r.ratio => Some(b),
        _ => Some(r),
    })
}

/// Grid adversary over predictions `P` and true peaks `p`.
///
/// Both grids are uniform over `[L, U]` and are augmented with the
/// breakpoints `Lη`, `Lγ`, `M` (one-way) and, for each `P`, the policy's
/// critical prices and `P` itself, each with neighbours just below and
/// above. Consistency is the worst ratio with `p = P`, robustness the
/// worst over all pairs.
pub fn certify<T, F>(
    policy_factory: F,
    bounds: &PriceBounds<T>,
    targets: TradeoffParams<T>,
    p_grid_size: usize,
    n: usize,
) -> Result<CertificateReport<T>>
where
    T: Scalar,
    F: Fn(T) -> Result<Policy<T>> + Sync,
{
    if p_grid_size < 10 || n < 100 {
        return Err(domain(format!("need p_grid_size >= 10 and N >= 100, got {p_grid_size} and {n}")));
    }
    let (l, u) = (bounds.lower(), bounds.upper());
    let tau = tiny(bounds);
    let mut anchors = vec![l, u, l * targets.eta, l * targets.gamma];
    if targets.kind == ProblemKind::Fractional && bounds.theta() > T::one() {
        if let Ok(bp) = boundary_breakpoints(bounds, targets.eta, targets.gamma) {
            anchors.push(bp.m);
        }
    }
    let mut predictions = uniform(bounds, p_grid_size);
    for &a in &anchors {
        with_neighbours(&mut predictions, a, tau);
    }
    let predictions = tidy(bounds, predictions);
    let spacing = (u - l) / T::lit((p_grid_size - 1) as f64);

    let per_prediction: Vec<Vec<Record<T>>> = predictions
        .par_iter()
        .map(|&prediction| -> Result<Vec<Record<T>>> {
            let policy = policy_factory(prediction)?;
            let mut peaks = uniform(bounds, p_grid_size);
            peaks.extend(anchors.iter().copied());
            for c in policy.critical_prices() {
                with_neighbours(&mut peaks, c, tau);
            }
            with_neighbours(&mut peaks, prediction, tau);
            with_neighbours(&mut peaks, prediction, spacing * T::lit(0.5));
            tidy(bounds, peaks)
                .into_iter()
                .map(|peak| Ok(Record { prediction, peak, ratio: adversarial_ratio(&policy, peak, n)? }))
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<Record<T>> = per_prediction.into_iter().flatten().collect();

    let worst = |r: &Record<T>| WorstCase { prediction: r.prediction, peak: r.peak, ratio: r.ratio };
    let consistency = argmax(records.iter().filter(|r| r.peak == r.prediction)).expect("P is always a tested peak");
    let robustness = argmax(records.iter()).expect("grids are non-empty");
    let kappa_curve = (0..KAPPA_POINTS)
        .map(|k| {
            let xi = (u - l) * T::lit(k as f64 / (KAPPA_POINTS - 1) as f64);
            let near = records.iter().filter(|r| (r.peak - r.prediction).abs() <= xi);
            KappaPoint { xi, kappa: argmax(near).map_or(T::one(), |r| r.ratio) }
        })
        .collect();
    let mut worst_instances = BTreeMap::new();
    worst_instances.insert("consistency".to_string(), worst(consistency));
    worst_instances.insert("robustness".to_string(), worst(robustness));
    Ok(CertificateReport {
        measured_consistency: consistency.ratio,
        measured_robustness: robustness.ratio,
        kappa_curve,
        worst_instances,
        targets,
    })
}

/// `κ(ξ)` at a fixed prediction: the worst ratio over peaks within `ξ` of `P`.
pub fn empirical_kappa<T, F>(
    policy_factory: F,
    bounds: &PriceBounds<T>,
    prediction: T,
    xi_grid: &[T],
    n: usize,
) -> Result<Vec<KappaPoint<T>>>
where
    T: Scalar,
    F: Fn(T) -> Result<Policy<T>>,
{
    bounds.check_prediction(prediction)?;
    let policy = policy_factory(prediction)?;
    let tau = tiny(bounds);
    let mut peaks = uniform(bounds, KAPPA_PEAKS);
    for c in policy.critical_prices() {
        with_neighbours(&mut peaks, c, tau);
    }
    peaks.push(prediction);
    for &xi in xi_grid {
        peaks.extend([prediction - xi, prediction + xi]);
    }
    let peaks = tidy(bounds, peaks);
    let ratios: Vec<(T, T)> = peaks
        .par_iter()
        .map(|&p| adversarial_ratio(&policy, p, n).map(|r| (p, r)))
        .collect::<Result<_>>()?;
    let mut curve: Vec<KappaPoint<T>> = xi_grid
        .iter()
        .map(|&xi| {
            let kappa = ratios
                .iter()
                .filter(|(p, _)| (*p - prediction).abs() <= xi)
                .fold(T::one(), |acc, &(_, r)| acc.max(r));
            KappaPoint { xi, kappa }
        })
        .collect();
    curve.sort_by(|a, b| a.xi.partial_cmp(&b.xi).expect("finite"));
    Ok(curve)
}
