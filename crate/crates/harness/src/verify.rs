//! Invariant sweep behind `ota verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use ota_core::analysis::{
    certify, check_sufficient_condition, design_partition, dominance_violations, lb_consistency_max_search,
    lb_consistency_one_way, pareto_frontier,
};
use ota_core::engine::{replay_allocation_optimality, run_instance, Policy};
use ota_core::thresholds::{
    boundary_breakpoints, intermediate_breakpoints, lambert_w, one_way_design, reservation_price, PiecewiseThreshold,
    TradeoffParams,
};
use ota_core::{Instance64, PriceBounds64, ProblemKind};

use crate::error::Result;

const KINDS: [ProblemKind; 2] = [ProblemKind::Integral, ProblemKind::Fractional];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub theta: f64,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn outcome(name: &str, failures: Vec<String>) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "ok".to_string()
        } else {
            format!("{} failure(s); first: {}", failures.len(), failures[0])
        },
    }
}

fn lambdas(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| k as f64 / (n - 1) as f64)
}

fn tradeoff_identities(theta: f64) -> CheckOutcome {
    let mut fails = Vec::new();
    for lambda in lambdas(200) {
        for kind in KINDS {
            match TradeoffParams::new(kind, lambda, theta).and_then(|t| t.identity_residual(theta)) {
                Ok(r) if r.abs() <= 1e-10 => {}
                Ok(r) => fails.push(format!("{kind:?} λ={lambda}: residual {r:e}")),
                Err(e) => fails.push(format!("{kind:?} λ={lambda}: {e}")),
            }
        }
    }
    outcome("trade-off identities", fails)
}

fn lambert_residuals() -> CheckOutcome {
    let lo = -(-1.0f64).exp();
    let mut fails = Vec::new();
    for k in 0..10_000 {
        let x = lo + (1e3 - lo) * k as f64 / 9_999.0;
        match lambert_w(x) {
            Ok(w) if (w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0) => {}
            Ok(w) => fails.push(format!("x={x}: W={w}")),
            Err(e) => fails.push(format!("x={x}: {e}")),
        }
    }
    outcome("Lambert W residuals", fails)
}

fn breakpoints(bounds: &PriceBounds64) -> CheckOutcome {
    let u = bounds.upper();
    let mut fails = Vec::new();
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let t = match TradeoffParams::new(ProblemKind::Fractional, lambda, bounds.theta()) {
            Ok(t) => t,
            Err(e) => {
                fails.push(format!("λ={lambda}: {e}"));
                continue;
            }
        };
        let bp = match boundary_breakpoints(bounds, t.eta, t.gamma) {
            Ok(bp) => bp,
            Err(e) => {
                fails.push(format!("λ={lambda}: {e}"));
                continue;
            }
        };
        if bp.residuals(bounds, t.eta, t.gamma).iter().any(|r| r.abs() > 1e-9 * u) {
            fails.push(format!("λ={lambda}: boundary residuals too large"));
        }
        for k in 0..11 {
            let p = bp.m + (u - bp.m) * k as f64 / 10.0;
            match intermediate_breakpoints(bounds, t.eta, t.gamma, p) {
                Ok(ib) => {
                    if ib.residuals(bounds, t.eta, t.gamma, p).iter().any(|r| r.abs() > 1e-8 * u) {
                        fails.push(format!("λ={lambda} P={p}: intermediate residuals too large"));
                    }
                    if !(0.0 <= ib.beta1 && ib.beta1 <= ib.beta1_prime && ib.beta1_prime <= ib.beta2 && ib.beta2 <= 1.0) {
                        fails.push(format!("λ={lambda} P={p}: breakpoints out of order"));
                    }
                }
                Err(e) => fails.push(format!("λ={lambda} P={p}: {e}")),
            }
        }
    }
    outcome("breakpoint residuals", fails)
}

fn threshold_of(kind: ProblemKind, bounds: &PriceBounds64, lambda: f64, p: f64) -> ota_core::Result<PiecewiseThreshold<f64>> {
    match kind {
        ProblemKind::Integral => PiecewiseThreshold::constant(reservation_price(bounds, lambda, p)?, *bounds),
        ProblemKind::Fractional => Ok(one_way_design(bounds, lambda, p)?.threshold),
    }
}

fn sufficient_condition(bounds: &PriceBounds64) -> CheckOutcome {
    let mut fails = Vec::new();
    for kind in KINDS {
        for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
            for k in 0..11 {
                let p = bounds.lower() + (bounds.upper() - bounds.lower()) * k as f64 / 10.0;
                let verdict = threshold_of(kind, bounds, lambda, p).and_then(|phi| {
                    phi.validate()?;
                    check_sufficient_condition(&phi, &design_partition(kind, bounds, lambda, p)?)
                });
                match verdict {
                    Ok(r) if r.passed() => {}
                    Ok(r) => fails.push(format!(
                        "{kind:?} λ={lambda} P={p}: {}",
                        r.first_failure().and_then(|f| f.violation.clone()).unwrap_or_else(|| "terminal value".into())
                    )),
                    Err(e) => fails.push(format!("{kind:?} λ={lambda} P={p}: {e}")),
                }
            }
        }
    }
    outcome("sufficient condition", fails)
}

fn certification(bounds: &PriceBounds64) -> CheckOutcome {
    let mut fails = Vec::new();
    for kind in KINDS {
        for lambda in [0.0, 0.5, 1.0] {
            let run = TradeoffParams::new(kind, lambda, bounds.theta()).and_then(|t| {
                certify(|p| Policy::learning_augmented(kind, bounds, lambda, p), bounds, t, 15, 2000)
            });
            match run {
                Ok(r) if r.within_targets(1e-3) => {}
                Ok(r) => fails.push(format!(
                    "{kind:?} λ={lambda}: consistency {} (η={}), robustness {} (γ={})",
                    r.measured_consistency, r.targets.eta, r.measured_robustness, r.targets.gamma
                )),
                Err(e) => fails.push(format!("{kind:?} λ={lambda}: {e}")),
            }
        }
    }
    outcome("certified consistency and robustness", fails)
}

fn replay(bounds: &PriceBounds64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut fails = Vec::new();
    for trial in 0..40 {
        let kind = KINDS[trial % 2];
        let n = rng.random_range(2..60);
        let prices: Vec<f64> = (0..n).map(|_| rng.random_range(bounds.lower()..=bounds.upper())).collect();
        let inst = Instance64::new(prices);
        let lambda: f64 = rng.random();
        let p = rng.random_range(bounds.lower()..=bounds.upper());
        let ok = Policy::learning_augmented(kind, bounds, lambda, p)
            .and_then(|policy| Ok(replay_allocation_optimality(&policy, &inst, &run_instance(&policy, &inst)?)));
        match ok {
            Ok(true) => {}
            Ok(false) => fails.push(format!("{kind:?} trial {trial}: allocation not optimal")),
            Err(e) => fails.push(format!("{kind:?} trial {trial}: {e}")),
        }
    }
    outcome("allocation optimality", fails)
}

fn lower_bounds(theta: f64) -> CheckOutcome {
    let mut fails = Vec::new();
    for lambda in lambdas(200) {
        for kind in KINDS {
            let gap = TradeoffParams::new(kind, lambda, theta).and_then(|t| {
                let lb = match kind {
                    ProblemKind::Integral => lb_consistency_max_search(t.gamma, theta)?,
                    ProblemKind::Fractional => lb_consistency_one_way(t.gamma, theta)?,
                };
                Ok((t.eta - lb).abs())
            });
            match gap {
                Ok(g) if g <= 1e-9 => {}
                Ok(g) => fails.push(format!("{kind:?} λ={lambda}: gap {g:e}")),
                Err(e) => fails.push(format!("{kind:?} λ={lambda}: {e}")),
            }
        }
    }
    match (
        pareto_frontier(theta, ProblemKind::Fractional, 1001),
        pareto_frontier(theta, ProblemKind::Integral, 1001),
    ) {
        (Ok(ow), Ok(om)) => {
            let bad = dominance_violations(&ow, &om, 100);
            if !bad.is_empty() {
                fails.push(format!("one-way frontier above 1-max at γ={}", bad[0]));
            }
        }
        (Err(e), _) | (_, Err(e)) => fails.push(e.to_string()),
    }
    outcome("lower bounds and frontiers", fails)
}

/// Runs every check with `L = 1`, `U = θ`.
pub fn run_verify(theta: f64) -> Result<VerifyReport> {
    let bounds = PriceBounds64::from_theta(1.0, theta)?;
    let mut checks = vec![tradeoff_identities(theta), lambert_residuals()];
    if theta > 1.0 {
        checks.push(breakpoints(&bounds));
        checks.push(sufficient_condition(&bounds));
        checks.push(lower_bounds(theta));
    }
    checks.push(certification(&bounds));
    checks.push(replay(&bounds));
    Ok(VerifyReport { theta, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_designs_pass() {
        let report = run_verify(5.0).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
