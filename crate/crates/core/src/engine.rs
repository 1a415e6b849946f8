//! Execution of the online threshold-based algorithm.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::market::{validate_instance, ExecutionTrace, Instance, PriceBounds, ProblemKind};
use crate::scalar::Scalar;
use crate::thresholds::{
    build_threshold_one_way, naive_reservation_price, pure_reservation_max_search, pure_threshold_one_way,
    reservation_price, NaiveMode, PiecewiseThreshold,
};

/// Grid spacing used by [`replay_allocation_optimality`].
const REPLAY_GRID: f64 = 1e-3;
const REPLAY_SLACK: f64 = 1e-9;

/// A conversion policy: a reservation price for 1-max-search or a
/// threshold function for one-way trading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[serde(bound = "T: Scalar")]
pub enum Policy<T> {
    Integral { bounds: PriceBounds<T>, reservation: T },
    Fractional { threshold: PiecewiseThreshold<T> },
}

impl<T: Scalar> Policy<T> {
    pub fn reservation(bounds: PriceBounds<T>, reservation: T) -> Result<Self> {
        if !bounds.contains(reservation) {
            return Err(domain(format!("reservation price {reservation} outside the price bounds")));
        }
        Ok(Policy::Integral { bounds, reservation })
    }

    pub fn threshold(threshold: PiecewiseThreshold<T>) -> Self {
        Policy::Fractional { threshold }
    }

    /// Prediction-aware policy with robustness parameter `λ`.
    pub fn learning_augmented(kind: ProblemKind, bounds: &PriceBounds<T>, lambda: T, prediction: T) -> Result<Self> {
        match kind {
            ProblemKind::Integral => Self::reservation(*bounds, reservation_price(bounds, lambda, prediction)?),
            ProblemKind::Fractional => Ok(Self::threshold(build_threshold_one_way(bounds, lambda, prediction)?)),
        }
    }

    /// Optimal prediction-free policy.
    pub fn pure_online(kind: ProblemKind, bounds: &PriceBounds<T>) -> Result<Self> {
        match kind {
            ProblemKind::Integral => Self::reservation(*bounds, pure_reservation_max_search(bounds)),
            ProblemKind::Fractional => Ok(Self::threshold(pure_threshold_one_way(bounds)?)),
        }
    }

    pub fn naive(bounds: &PriceBounds<T>, mode: NaiveMode<T>, prediction: T) -> Result<Self> {
        Self::reservation(*bounds, naive_reservation_price(bounds, mode, prediction)?)
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            Policy::Integral { .. } => ProblemKind::Integral,
            Policy::Fractional { .. } => ProblemKind::Fractional,
        }
    }

    pub fn bounds(&self) -> &PriceBounds<T> {
        match self {
            Policy::Integral { bounds, .. } => bounds,
            Policy::Fractional { threshold } => threshold.bounds(),
        }
    }

    /// Prices where the policy's behaviour changes; adversaries probe these.
    pub fn critical_prices(&self) -> Vec<T> {
        match self {
            Policy::Integral { reservation, .. } => vec![*reservation],
            Policy::Fractional { threshold } => threshold.critical_prices(),
        }
    }

    /// `∫_a^b φ`, with `φ ≡ Φ` for a reservation price.
    fn cost(&self, a: T, b: T) -> Result<T> {
        match self {
            Policy::Integral { reservation, .. } => Ok(*reservation * (b - a)),
            Policy::Fractional { threshold } => threshold.integral(a, b),
        }
    }
}

/// Allocation chosen at utilization `w` when price `v` is revealed: the
/// maximiser of `v·x - ∫_w^{w+x} φ`, converting as much as possible on ties.
pub fn ota_step<T: Scalar>(policy: &Policy<T>, w: T, v: T) -> Result<T> {
    if !(w >= T::zero() && w <= T::one()) {
        return Err(domain(format!("utilization {w} outside [0, 1]")));
    }
    if !policy.bounds().contains(v) {
        return Err(domain(format!("price {v} outside the price bounds")));
    }
    match policy {
        Policy::Integral { reservation, .. } => {
            Ok(if w == T::zero() && v >= *reservation { T::one() } else { T::zero() })
        }
        Policy::Fractional { threshold } => {
            let target = threshold.pseudo_inverse(v)?;
            Ok((target - w).max(T::zero()).min(T::one() - w))
        }
    }
}

/// Runs the policy over the instance; whatever is left after step `N-1`
/// is converted at the last price.
pub fn run_instance<T: Scalar>(policy: &Policy<T>, inst: &Instance<T>) -> Result<ExecutionTrace<T>> {
    let prices = inst.prices();
    if prices.is_empty() || prices.iter().any(|&v| !policy.bounds().contains(v)) {
        validate_instance(inst.clone(), policy.bounds())?;
    }
    let n = prices.len();
    let mut allocations = Vec::with_capacity(n);
    let mut path = Vec::with_capacity(n + 1);
    let mut w = T::zero();
    let mut profit = T::zero();
    path.push(w);
    for &v in &prices[..n - 1] {
        let x = ota_step(policy, w, v)?;
        allocations.push(x);
        profit = profit + v * x;
        w = (w + x).min(T::one());
        path.push(w);
    }
    let compulsory = T::one() - w;
    allocations.push(compulsory);
    profit = profit + prices[n - 1] * compulsory;
    path.push(T::one());
    Ok(ExecutionTrace { prices: prices.to_vec(), allocations, utilization_path: path, profit, compulsory_amount: compulsory })
}

/// Checks every non-compulsory step of `trace` against a grid search of the
/// per-step objective `v·x - ∫_w^{w+x} φ` over feasible `x`.
pub fn replay_allocation_optimality<T: Scalar>(policy: &Policy<T>, inst: &Instance<T>, trace: &ExecutionTrace<T>) -> bool {
    let prices = inst.prices();
    let n = prices.len();
    if n == 0 || trace.allocations.len() != n || trace.utilization_path.len() != n + 1 {
        return false;
    }
    let slack = T::lit(REPLAY_SLACK);
    let objective = |w: T, v: T, x: T| -> Option<T> { policy.cost(w, w + x).ok().map(|c| v * x - c) };
    for step in 0..n - 1 {
        let (v, w, x) = (prices[step], trace.utilization_path[step], trace.allocations[step]);
        let room = T::one() - w;
        if x < T::zero() || x > room + slack {
            return false;
        }
        let Some(chosen) = objective(w, v, x.min(room)) else { return false };
        let candidates: Vec<T> = match policy {
            Policy::Integral { .. } => {
                if x != T::zero() && x != T::one() {
                    return false;
                }
                if w == T::zero() { vec![T::zero(), T::one()] } else { vec![T::zero()] }
            }
            Policy::Fractional { .. } => {
                let steps = (room.as_f64() / REPLAY_GRID).floor() as usize;
                (0..=steps).map(|k| T::lit(k as f64 * REPLAY_GRID)).chain(std::iter::once(room)).collect()
            }
        };
        for c in candidates {
            match objective(w, v, c.min(room)) {
                Some(value) if value <= chosen + slack => {}
                _ => return false,
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{offline_opt, profit_ratio};
    use crate::thresholds::alpha_star;
    use proptest::prelude::*;

    fn b() -> PriceBounds<f64> {
        PriceBounds::new(2.0, 10.0).unwrap()
    }

    fn inst(p: &[f64]) -> Instance<f64> {
        Instance::new(p.to_vec())
    }

    fn p_instance(p: f64, n: usize) -> Instance<f64> {
        let delta = (p - 2.0) / (n - 2) as f64;
        let mut v: Vec<f64> = (0..n - 1).map(|k| 2.0 + k as f64 * delta).collect();
        v[n - 2] = p;
        v.push(2.0);
        Instance::new(v)
    }

    #[test]
    fn integral_first_price_at_least_reservation() {
        let policy = Policy::reservation(b(), 4.0).unwrap();
        assert_eq!(ota_step(&policy, 0.0, 5.0).unwrap(), 1.0);
        assert_eq!(ota_step(&policy, 0.0, 4.0).unwrap(), 1.0);
        assert_eq!(ota_step(&policy, 0.0, 3.9).unwrap(), 0.0);
        assert_eq!(ota_step(&policy, 1.0, 9.0).unwrap(), 0.0);
    }

    #[test]
    fn fractional_step_cases() {
        let policy = Policy::pure_online(ProblemKind::Fractional, &b()).unwrap();
        let Policy::Fractional { threshold } = &policy else { unreachable!() };
        let phi_w = threshold.eval(0.3).unwrap();
        assert_eq!(ota_step(&policy, 0.3, phi_w - 0.1).unwrap(), 0.0);
        let pinned = Policy::threshold(PiecewiseThreshold::constant(6.0, b()).unwrap());
        assert_eq!(ota_step(&pinned, 0.25, 7.0).unwrap(), 0.75);
        assert!(ota_step(&policy, 1.5, 3.0).is_err());
        assert!(ota_step(&policy, 0.5, 11.0).is_err());
    }

    #[test]
    fn integral_runs() {
        let t = run_instance(&Policy::reservation(b(), 4.5).unwrap(), &inst(&[3.0, 5.0, 4.0, 2.0])).unwrap();
        assert_eq!(t.allocations, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(t.profit, 5.0);
        let t = run_instance(&Policy::reservation(b(), 6.0).unwrap(), &inst(&[3.0, 5.0, 4.0, 2.0])).unwrap();
        assert_eq!(t.profit, 2.0);
        assert_eq!(t.compulsory_amount, 1.0);
        assert_eq!(t.utilization_path, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn pure_one_way_on_upper_p_instance() {
        let policy = Policy::pure_online(ProblemKind::Fractional, &b()).unwrap();
        let i = p_instance(10.0, 2000);
        let t = run_instance(&policy, &i).unwrap();
        let ratio = profit_ratio(offline_opt(&i).unwrap(), t.profit).unwrap();
        assert!(ratio <= alpha_star(5.0).unwrap() * (1.0 + 1e-3), "ratio {ratio}");
        assert!(ratio >= 1.0);
    }

    #[test]
    fn out_of_bounds_instance_is_rejected() {
        let policy = Policy::reservation(b(), 4.0).unwrap();
        assert!(run_instance(&policy, &inst(&[3.0, 12.0])).is_err());
        assert!(run_instance(&policy, &inst(&[])).is_err());
    }

    #[test]
    fn replay_detects_perturbation() {
        let policy = Policy::pure_online(ProblemKind::Fractional, &b()).unwrap();
        let i = inst(&[4.0, 5.0, 6.0, 2.0]);
        let t = run_instance(&policy, &i).unwrap();
        assert!(replay_allocation_optimality(&policy, &i, &t));
        let mut bad = t.clone();
        bad.allocations[1] += 0.05;
        assert!(!replay_allocation_optimality(&policy, &i, &bad));
        let mut low = t.clone();
        low.allocations[2] -= 0.05;
        assert!(!replay_allocation_optimality(&policy, &i, &low));
    }

    #[test]
    fn replay_accepts_zero_step_below_threshold() {
        let policy = Policy::pure_online(ProblemKind::Fractional, &b()).unwrap();
        let i = inst(&[2.5, 2.0]);
        let t = run_instance(&policy, &i).unwrap();
        assert_eq!(t.allocations[0], 0.0);
        assert!(replay_allocation_optimality(&policy, &i, &t));
    }

    #[test]
    fn trace_csv_has_one_row_per_step() {
        let t = run_instance(&Policy::reservation(b(), 4.5).unwrap(), &inst(&[3.0, 5.0, 2.0])).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(2).unwrap().starts_with("2,5e0,1e0,1e0,5e0"));
    }

    fn prices_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(2.0f64..=10.0, 1..60)
    }

    proptest! {
        #[test]
        fn trace_invariants(
            prices in prices_strategy(),
            lambda in 0.0f64..=1.0,
            pred in 2.0f64..=10.0,
            fractional in any::<bool>(),
        ) {
            let kind = if fractional { ProblemKind::Fractional } else { ProblemKind::Integral };
            let policy = Policy::learning_augmented(kind, &b(), lambda, pred).unwrap();
            let i = inst(&prices);
            let t = run_instance(&policy, &i).unwrap();
            let total: f64 = t.allocations.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert_eq!(*t.utilization_path.last().unwrap(), 1.0);
            for k in 0..prices.len() {
                prop_assert!(t.allocations[k] >= 0.0);
                prop_assert!(t.utilization_path[k + 1] >= t.utilization_path[k]);
            }
            let profit: f64 = prices.iter().zip(&t.allocations).map(|(v, x)| v * x).sum();
            prop_assert!((profit - t.profit).abs() <= 1e-12);
            prop_assert!(t.profit >= 2.0 - 1e-12 && t.profit <= 10.0 + 1e-12);
            let ratio = profit_ratio(offline_opt(&i).unwrap(), t.profit).unwrap();
            prop_assert!(ratio >= 1.0 - 1e-12 && ratio <= 5.0 + 1e-9);
            if let Policy::Fractional { threshold } = &policy {
                for k in 0..prices.len() - 1 {
                    let (w0, w1) = (t.utilization_path[k], t.utilization_path[k + 1]);
                    let cost = threshold.integral(w0, w1).unwrap();
                    prop_assert!(prices[k] * t.allocations[k] >= cost - 1e-12);
                }
            } else {
                for &x in &t.allocations[..prices.len() - 1] {
                    prop_assert!(x == 0.0 || x == 1.0);
                }
            }
            let again = run_instance(&policy, &i).unwrap();
            prop_assert_eq!(again, t);
        }
    }
}
