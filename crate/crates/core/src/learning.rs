//! Selection of the robustness parameter `λ`: fixed choices, the offline
//! optimum per instance, and an exponentially weighted forecaster over a
//! `λ` grid fed with full-information rewards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_instance, Policy};
use crate::error::{domain, Error, Result};
use crate::market::{Instance, PriceBounds, ProblemKind};

/// Grid size used when none is given.
pub const DEFAULT_ARMS: usize = 33;

const WEIGHT_SUM_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-12;

/// `K` points spread uniformly over `[0, 1]`.
pub fn lambda_grid(k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(domain(format!("lambda grid needs at least 2 points, got {k}")));
    }
    Ok((0..k).map(|i| i as f64 / (k - 1) as f64).collect())
}

/// Profit per unit mapped into `[0, 1]` by `(profit - L)/(U - L)`.
pub fn normalized_reward(profit: f64, bounds: &PriceBounds<f64>) -> f64 {
    let width = bounds.upper() - bounds.lower();
    if width <= 0.0 {
        return 0.0;
    }
    ((profit - bounds.lower()) / width).clamp(0.0, 1.0)
}

/// Profit of the `λ`-policy for every `λ` of the grid on a revealed instance.
pub fn arm_profits(
    inst: &Instance<f64>,
    prediction: f64,
    bounds: &PriceBounds<f64>,
    kind: ProblemKind,
    grid: &[f64],
) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|&lambda| {
            let policy = Policy::learning_augmented(kind, bounds, lambda, prediction)?;
            Ok(run_instance(&policy, inst)?.profit)
        })
        .collect()
}

/// The prediction-free choice.
pub fn lambda_worst_case() -> f64 {
    1.0
}

/// Grid `λ` with the largest profit on `inst`, smallest `λ` on ties.
pub fn lambda_offline_best(
    inst: &Instance<f64>,
    prediction: f64,
    bounds: &PriceBounds<f64>,
    kind: ProblemKind,
    grid_size: usize,
) -> Result<f64> {
    let grid = lambda_grid(grid_size)?;
    let profits = arm_profits(inst, prediction, bounds, kind, &grid)?;
    Ok(grid[argmax(&profits)])
}

/// First index whose value beats all earlier ones by more than rounding.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + TIE_TOL * values[best].abs().max(1.0) {
            best = i;
        }
    }
    best
}

/// Rewards of every arm in one round and the arm that was played, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub rewards: Vec<f64>,
    pub chosen: Option<usize>,
}

/// Exponentially weighted forecaster over a `λ` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    lambda_grid: Vec<f64>,
    weights: Vec<f64>,
    round: u64,
    draws: u64,
    rng_seed: u64,
    pending: Option<usize>,
    history: Vec<RoundOutcome>,
}

impl LearnerState {
    pub fn new(lambda_grid: Vec<f64>, rng_seed: u64) -> Result<Self> {
        let k = lambda_grid.len();
        let state = Self {
            weights: vec![1.0 / k.max(1) as f64; k],
            lambda_grid,
            round: 0,
            draws: 0,
            rng_seed,
            pending: None,
            history: Vec::new(),
        };
        state.validate()?;
        Ok(state)
    }

    /// Uniform grid of `k` arms.
    pub fn uniform(k: usize, rng_seed: u64) -> Result<Self> {
        Self::new(lambda_grid(k)?, rng_seed)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.lambda_grid.len();
        if k < 2 || self.weights.len() != k {
            return Err(Error::InvalidState(format!("{k} arms with {} weights", self.weights.len())));
        }
        if self.lambda_grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::InvalidState("lambda grid must lie in [0, 1]".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidState("weights must be positive and finite".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidState(format!("weights sum to {total}")));
        }
        if self.pending.is_some_and(|a| a >= k) || self.history.iter().any(|r| r.rewards.len() != k) {
            return Err(Error::InvalidState("history does not match the grid".into()));
        }
        Ok(())
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn history(&self) -> &[RoundOutcome] {
        &self.history
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("learner serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let state: Self = serde_json::from_str(text).map_err(|e| Error::InvalidState(e.to_string()))?;
        state.validate()?;
        Ok(state)
    }
}

/// Draws an arm from the weights and returns its `λ`. Each draw uses its
/// own ChaCha stream so the sequence only depends on the seed.
pub fn alf_select(mut state: LearnerState) -> (f64, LearnerState) {
    let mut rng = ChaCha8Rng::seed_from_u64(state.rng_seed);
    rng.set_stream(state.draws);
    state.draws += 1;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut arm = state.weights.len() - 1;
    for (i, w) in state.weights.iter().enumerate() {
        acc += w;
        if u < acc {
            arm = i;
            break;
        }
    }
    state.pending = Some(arm);
    (state.lambda_grid[arm], state)
}

/// Multiplies each weight by `exp(rate · reward)` with
/// `rate = √(8 ln K / t)` and renormalizes.
pub fn alf_update(mut state: LearnerState, rewards: &[f64]) -> Result<LearnerState> {
    let k = state.weights.len();
    if rewards.len() != k {
        return Err(domain(format!("{} rewards for {k} arms", rewards.len())));
    }
    if let Some((arm, &value)) = rewards.iter().enumerate().find(|(_, r)| !(0.0..=1.0).contains(*r)) {
        return Err(Error::BadReward { arm, value });
    }
    let t = (state.round + 1) as f64;
    let rate = (8.0 * (k as f64).ln() / t).sqrt();
    let logs: Vec<f64> = state.weights.iter().zip(rewards).map(|(w, r)| w.ln() + rate * r).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    state.weights = raw.iter().map(|w| (w / total).max(f64::MIN_POSITIVE)).collect();
    state.round += 1;
    state.history.push(RoundOutcome { rewards: rewards.to_vec(), chosen: state.pending.take() });
    Ok(state)
}

/// Cumulative regret after each played round, against the best fixed arm
/// in hindsight up to that round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regret {
    pub per_round: Vec<f64>,
    pub cumulative: f64,
    pub average: f64,
}

/// Regret over the rounds of `history` where an arm was played.
pub fn regret(history: &[RoundOutcome]) -> Regret {
    let k = history.first().map_or(0, |r| r.rewards.len());
    let mut totals = vec![0.0; k];
    let mut earned = 0.0;
    let mut per_round = Vec::new();
    for round in history {
        let Some(arm) = round.chosen else { continue };
        for (t, r) in totals.iter_mut().zip(&round.rewards) {
            *t += r;
        }
        earned += round.rewards[arm];
        let best = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        per_round.push(best - earned);
    }
    let cumulative = per_round.last().copied().unwrap_or(0.0);
    let average = if per_round.is_empty() { 0.0 } else { cumulative / per_round.len() as f64 };
    Regret { per_round, cumulative, average }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::p_instance;
    use crate::thresholds::{pure_threshold_one_way, reservation_price};
    use rand_distr::{Bernoulli, Distribution};

    fn b() -> PriceBounds<f64> {
        PriceBounds::new(2.0, 10.0).unwrap()
    }

    #[test]
    fn worst_case_choice_ignores_predictions() {
        let lambda = lambda_worst_case();
        assert_eq!(lambda, 1.0);
        for p in [2.0, 5.0, 10.0] {
            assert!((reservation_price(&b(), lambda, p).unwrap() - 20f64.sqrt()).abs() < 1e-12);
        }
        let pure = pure_threshold_one_way(&b()).unwrap();
        let Policy::Fractional { threshold } = Policy::learning_augmented(ProblemKind::Fractional, &b(), lambda, 7.0).unwrap() else {
            unreachable!()
        };
        for k in 0..100 {
            let w = k as f64 / 99.0;
            assert!((threshold.eval(w).unwrap() - pure.eval(w).unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn offline_best_cases() {
        let inst = p_instance(&b(), 7.0, 300).unwrap();
        for kind in [ProblemKind::Integral, ProblemKind::Fractional] {
            let lambda = lambda_offline_best(&inst, 7.0, &b(), kind, 11).unwrap();
            let at = |l: f64| run_instance(&Policy::learning_augmented(kind, &b(), l, 7.0).unwrap(), &inst).unwrap().profit;
            assert!(at(lambda) >= at(1.0));
        }
        let flat = Instance::new(vec![2.0; 20]);
        assert_eq!(lambda_offline_best(&flat, 5.0, &b(), ProblemKind::Fractional, 9).unwrap(), 0.0);
        let top = p_instance(&b(), 10.0, 2000).unwrap();
        assert_eq!(lambda_offline_best(&top, 10.0, &b(), ProblemKind::Fractional, 11).unwrap(), 0.0);
        assert!(lambda_offline_best(&top, 10.0, &b(), ProblemKind::Fractional, 1).is_err());
    }

    #[test]
    fn selection_is_seeded() {
        let s = LearnerState::uniform(4, 7).unwrap();
        let (a, s1) = alf_select(s.clone());
        let (b, _) = alf_select(s.clone());
        assert_eq!(a, b);
        assert_eq!(s1.weights(), s.weights());
        let mut degenerate = LearnerState::uniform(4, 3).unwrap();
        degenerate.weights = vec![1.0 - 3e-300, 1e-300, 1e-300, 1e-300];
        for _ in 0..100 {
            let (lambda, next) = alf_select(degenerate);
            assert_eq!(lambda, 0.0);
            degenerate = next;
        }
    }

    #[test]
    fn concentrates_on_the_better_arm() {
        let mut s = LearnerState::new(vec![0.0, 1.0], 11).unwrap();
        for _ in 0..500 {
            s = alf_update(s, &[1.0, 0.0]).unwrap();
        }
        let mut hits = 0;
        for _ in 0..1000 {
            let (lambda, next) = alf_select(s);
            hits += usize::from(lambda == 0.0);
            s = next;
        }
        assert!(hits >= 950, "{hits}");
    }

    #[test]
    fn update_rules() {
        let s = LearnerState::uniform(5, 0).unwrap();
        let same = alf_update(s.clone(), &[0.4; 5]).unwrap();
        for (a, b) in same.weights().iter().zip(s.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(same.round(), 1);
        let mut s = s;
        let mut prev = 0.2;
        for _ in 0..50 {
            s = alf_update(s, &[0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
            assert!(s.weights()[2] >= prev);
            prev = s.weights()[2];
        }
        assert!(prev > 0.999);
        assert!(matches!(
            alf_update(s.clone(), &[0.0, 1.5, 0.0, 0.0, 0.0]),
            Err(Error::BadReward { arm: 1, .. })
        ));
        assert!(alf_update(s, &[0.5; 3]).is_err());
    }

    #[test]
    fn regret_arithmetic() {
        let h = vec![RoundOutcome { rewards: vec![0.8, 0.3], chosen: Some(1) }];
        assert!((regret(&h).cumulative - 0.5).abs() < 1e-15);
        let best = vec![RoundOutcome { rewards: vec![0.2, 0.9], chosen: Some(1) }; 10];
        assert_eq!(regret(&best).cumulative, 0.0);
        let skipped = vec![RoundOutcome { rewards: vec![0.2, 0.9], chosen: None }];
        assert!(regret(&skipped).per_round.is_empty());
    }

    fn play(state: LearnerState, rounds: usize, mut rewards: impl FnMut(usize) -> Vec<f64>) -> LearnerState {
        (0..rounds).fold(state, |s, t| {
            let (_, s) = alf_select(s);
            alf_update(s, &rewards(t)).unwrap()
        })
    }

    #[test]
    fn regret_envelopes() {
        let k = DEFAULT_ARMS;
        let t = 500;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let means: Vec<f64> = (0..k).map(|i| 0.2 + 0.6 * i as f64 / (k - 1) as f64).collect();
        let s = play(LearnerState::uniform(k, 9).unwrap(), t, |_| {
            means.iter().map(|&m| f64::from(u8::from(Bernoulli::new(m).unwrap().sample(&mut rng)))).collect()
        });
        let r = regret(s.history());
        let bound = 2.0 * (t as f64 * (k as f64).ln() / 2.0).sqrt() + k as f64;
        assert!(r.cumulative <= bound, "{} > {bound}", r.cumulative);
        assert!(r.average <= 0.1, "{}", r.average);
        let total: f64 = s.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12 && s.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn adversarial_stream_stays_within_bound() {
        let k = 8;
        let t = 500;
        let s = play(LearnerState::uniform(k, 2).unwrap(), t, |round| {
            (0..k).map(|i| if (round / 50 + i) % 2 == 0 { 1.0 } else { 0.0 }).collect()
        });
        let bound = 2.0 * (t as f64 * (k as f64).ln() / 2.0).sqrt() + k as f64;
        assert!(regret(s.history()).cumulative <= bound);
    }

    #[test]
    fn deterministic_streams() {
        let run = || play(LearnerState::uniform(6, 4).unwrap(), 50, |t| (0..6).map(|i| ((t * 7 + i * 3) % 10) as f64 / 10.0).collect());
        assert_eq!(run(), run());
    }

    #[test]
    fn checkpoint_round_trip() {
        let s = play(LearnerState::uniform(3, 1).unwrap(), 5, |_| vec![0.1, 0.5, 0.9]);
        let back = LearnerState::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(LearnerState::from_json(r#"{"lambda_grid":[0.0],"weights":[1.0],"round":0,"draws":0,"rng_seed":0,"pending":null,"history":[]}"#).is_err());
        assert!(LearnerState::uniform(1, 0).is_err());
    }

    #[test]
    fn rewards_normalize() {
        assert_eq!(normalized_reward(2.0, &b()), 0.0);
        assert_eq!(normalized_reward(10.0, &b()), 1.0);
        assert_eq!(normalized_reward(6.0, &b()), 0.5);
    }
}
