use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{PriceBounds, ProblemKind};
use crate::scalar::Scalar;
use crate::thresholds::{one_way_design, reservation_price, tradeoff_max_search, PiecewiseThreshold};

const GRID: usize = 1000;
const REL_SLACK: f64 = 1e-9;
const BOUNDARY_SLACK: f64 = 1e-6;

/// Price breakpoints `L = M_0 < … < M_I = U`, utilization breakpoints
/// `0 = β_0 ≤ … ≤ β_I = 1` and the target ratio of each piece.
///
/// The last price piece may be the singleton `[U]`, in which case
/// `M_{I-1} = M_I = U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Partition<T> {
    pub prices: Vec<T>,
    pub utilizations: Vec<T>,
    pub alphas: Vec<T>,
}

impl<T: Scalar> Partition<T> {
    /// Drops interior pieces whose price range is empty.
    fn without_empty_pieces(mut self, tol: T) -> Self {
        let mut i = 1;
        while i + 1 < self.prices.len() {
            if self.prices[i] - self.prices[i - 1] <= tol {
                self.prices.remove(i);
                self.utilizations.remove(i);
                self.alphas.remove(i - 1);
            } else {
                i += 1;
            }
        }
        self
    }

    fn validate(&self, bounds: &PriceBounds<T>) -> Result<()> {
        let bad = |msg: String| Err(Error::BadPartition(msg));
        let (m, b, a) = (&self.prices, &self.utilizations, &self.alphas);
        if m.len() < 2 || b.len() != m.len() || a.len() + 1 != m.len() {
            return bad(format!("lengths {}, {}, {} do not describe I pieces", m.len(), b.len(), a.len()));
        }
        let tol = T::lit(REL_SLACK) * bounds.upper();
        if (m[0] - bounds.lower()).abs() > tol || (m[m.len() - 1] - bounds.upper()).abs() > tol {
            return bad(format!("price partition must run from L to U, got {} .. {}", m[0], m[m.len() - 1]));
        }
        let last = m.len() - 1;
        for i in 1..m.len() {
            let singleton_tail = i == last && m[i] == m[i - 1] && i > 1;
            if !(m[i] > m[i - 1] || singleton_tail) {
                return bad(format!("price breakpoints not increasing at index {i}"));
            }
        }
        if b[0] != T::zero() || b[last] != T::one() || b.windows(2).any(|w| w[1] < w[0]) {
            return bad("utilization breakpoints must be non-decreasing from 0 to 1".into());
        }
        if a.iter().any(|x| !x.is_finite() || *x <= T::zero()) {
            return bad("ratios must be finite and positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SufficientCase {
    /// `M_i ≤ φ(0)`.
    I,
    /// `φ(0) < M_i ≤ φ(1)`.
    II,
    /// `M_i > φ(1)`.
    III,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PieceVerdict<T> {
    pub index: usize,
    pub case: SufficientCase,
    pub passed: bool,
    /// Violated inequality and where, when `passed` is false.
    pub violation: Option<String>,
    /// Utilization at which the violation was found.
    pub location: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SufficientReport<T> {
    pub pieces: Vec<PieceVerdict<T>>,
    /// Whether `φ(1)` is one of the price breakpoints.
    pub terminal_ok: bool,
}

impl<T: Scalar> SufficientReport<T> {
    pub fn passed(&self) -> bool {
        self.terminal_ok && self.pieces.iter().all(|p| p.passed)
    }

    pub fn first_failure(&self) -> Option<&PieceVerdict<T>> {
        self.pieces.iter().find(|p| !p.passed)
    }
}

struct Verdict<T> {
    violation: Option<(String, Option<T>)>,
}

impl<T: Scalar> Verdict<T> {
    fn ok() -> Self {
        Verdict { violation: None }
    }

    fn fail(msg: String, at: Option<T>) -> Self {
        Verdict { violation: Some((msg, at)) }
    }
}

/// Checks `φ` piece by piece against the three cases of the sufficient
/// condition for `α`-competitiveness over the price partition.
///
/// Case II pieces are verified on a grid of 1000 utilizations: the flat
/// part must sit at `M_{i-1}`, the increasing part must satisfy
/// `φ(w) ≤ α_i [∫_0^w φ + (1 - w)L]`, and `φ(β_i⁻) = M_i`.
pub fn check_sufficient_condition<T: Scalar>(
    phi: &PiecewiseThreshold<T>,
    partition: &Partition<T>,
) -> Result<SufficientReport<T>> {
    let bounds = *phi.bounds();
    partition.validate(&bounds)?;
    let (l, u) = (bounds.lower(), bounds.upper());
    let one = T::one();
    let rel = T::lit(REL_SLACK);
    let tol = rel * u;
    let boundary_tol = T::lit(BOUNDARY_SLACK) * u;
    let (phi0, phi1) = (phi.at_zero(), phi.at_one());
    let (m, beta, alpha) = (&partition.prices, &partition.utilizations, &partition.alphas);

    let mut pieces = Vec::with_capacity(alpha.len());
    for i in 1..m.len() {
        let (m_prev, m_i, a) = (m[i - 1], m[i], alpha[i - 1]);
        let (b_prev, b_i) = (beta[i - 1], beta[i]);
        let case = if m_i <= phi0 + tol {
            SufficientCase::I
        } else if m_i <= phi1 + tol {
            SufficientCase::II
        } else {
            SufficientCase::III
        };
        let verdict = match case {
            SufficientCase::I => {
                // φ ≡ U leaves the last piece no room to start at β = 0.
                let pinned_top = i == m.len() - 1 && phi0 >= u - tol;
                if b_i > rel && !pinned_top {
                    Verdict::fail(format!("case I needs beta_{i} = 0, got {b_i}"), Some(b_i))
                } else if pinned_top && m_prev >= u - tol {
                    if m_i > a * phi0 * (one + rel) {
                        Verdict::fail(format!("case I: U = {m_i} > alpha_{i} phi(0) = {}", a * phi0), None)
                    } else {
                        Verdict::ok()
                    }
                } else if m_i > a * l * (one + rel) {
                    Verdict::fail(format!("case I: M_{i} = {m_i} > alpha_{i} L = {}", a * l), None)
                } else {
                    Verdict::ok()
                }
            }
            SufficientCase::III => {
                let total = phi.integral(T::zero(), one)?;
                if b_i < one - rel {
                    Verdict::fail(format!("case III needs beta_{i} = 1, got {b_i}"), Some(b_i))
                } else if m_i > a * total * (one + rel) {
                    Verdict::fail(format!("case III: M_{i} = {m_i} > alpha_{i} * integral = {}", a * total), None)
                } else {
                    Verdict::ok()
                }
            }
            SufficientCase::II => case_two(phi, i, m_prev, m_i, a, b_prev, b_i, tol, boundary_tol)?,
        };
        let (violation, location) = match verdict.violation {
            Some((msg, at)) => (Some(msg), at),
            None => (None, None),
        };
        pieces.push(PieceVerdict { index: i, case, passed: violation.is_none(), violation, location });
    }
    let terminal_ok = m.iter().any(|&mi| (mi - phi1).abs() <= boundary_tol);
    Ok(SufficientReport { pieces, terminal_ok })
}

#[allow(clippy::too_many_arguments)]
fn case_two<T: Scalar>(
    phi: &PiecewiseThreshold<T>,
    i: usize,
    m_prev: T,
    m_i: T,
    alpha: T,
    b_prev: T,
    b_i: T,
    tol: T,
    boundary_tol: T,
) -> Result<Verdict<T>> {
    let l = phi.bounds().lower();
    let one = T::one();
    let rel = T::lit(REL_SLACK);
    let b_flat = phi.pseudo_inverse(m_prev)?.max(b_prev).min(b_i);
    let steps = T::lit(GRID as f64);

    if b_flat > b_prev {
        for k in 0..GRID {
            let w = b_prev + (b_flat - b_prev) * T::lit(k as f64) / steps;
            let v = phi.eval(w)?;
            if (v - m_prev).abs() > boundary_tol {
                return Ok(Verdict::fail(format!("case II flat part: phi({w}) = {v} != M_{} = {m_prev}", i - 1), Some(w)));
            }
        }
    }
    if b_i > b_flat {
        for k in 0..GRID {
            let w = b_flat + (b_i - b_flat) * T::lit(k as f64) / steps;
            let v = phi.eval(w)?;
            let rhs = alpha * (phi.integral(T::zero(), w)? + (one - w) * l);
            if v > rhs * (one + rel) + tol * T::lit(1e-3) {
                return Ok(Verdict::fail(
                    format!("case II inequality: phi({w}) = {v} > alpha_{i} [integral + (1-w)L] = {rhs}"),
                    Some(w),
                ));
            }
        }
    }
    if b_i > b_prev {
        let end = phi.left_limit(b_i)?;
        if (end - m_i).abs() > boundary_tol {
            return Ok(Verdict::fail(format!("case II boundary: phi(beta_{i}-) = {end} != M_{i} = {m_i}"), Some(b_i)));
        }
    }
    Ok(Verdict::ok())
}

/// The partition used to argue the guarantees of the prediction-aware
/// design for `(λ, P)`.
pub fn design_partition<T: Scalar>(
    kind: ProblemKind,
    bounds: &PriceBounds<T>,
    lambda: T,
    prediction: T,
) -> Result<Partition<T>> {
    bounds.check_prediction(prediction)?;
    let (l, u) = (bounds.lower(), bounds.upper());
    let (zero, one) = (T::zero(), T::one());
    if bounds.theta() == one {
        return Err(Error::BadPartition("no price partition when L = U".into()));
    }
    let tol = T::lit(REL_SLACK) * u;
    let partition = match kind {
        ProblemKind::Integral => {
            let t = tradeoff_max_search(lambda, bounds.theta())?;
            let phi = reservation_price(bounds, lambda, prediction)?;
            let (low, high) = (l * t.eta, l * t.gamma);
            let two = |alphas: Vec<T>| Partition { prices: vec![l, phi, u], utilizations: vec![zero, zero, one], alphas };
            if prediction >= high || high - low <= tol {
                two(vec![t.gamma, t.eta])
            } else if prediction - phi <= tol {
                // Φ = P only at P = Lη, except at λ = 0 where Φ follows P.
                two(vec![if prediction <= low + tol { t.eta } else { t.gamma }, t.gamma])
            } else {
                Partition {
                    prices: vec![l, phi, prediction, u],
                    utilizations: vec![zero, zero, one, one],
                    alphas: vec![t.gamma, t.eta, t.gamma],
                }
            }
        }
        ProblemKind::Fractional => {
            let d = one_way_design(bounds, lambda, prediction)?;
            let (eta, gamma) = (d.params.eta, d.params.gamma);
            match d.intermediate {
                None => Partition {
                    prices: vec![l, d.boundary.m, u],
                    utilizations: vec![zero, d.boundary.beta, one],
                    alphas: vec![eta, gamma],
                },
                Some(ib) if prediction - ib.m1 <= tol => Partition {
                    prices: vec![l, prediction, u],
                    utilizations: vec![zero, ib.beta1, one],
                    alphas: vec![gamma, if prediction == u { eta } else { gamma }],
                },
                Some(ib) => Partition {
                    prices: vec![l, ib.m1, prediction, u],
                    utilizations: vec![zero, ib.beta1, ib.beta2, one],
                    alphas: vec![gamma, eta, gamma],
                },
            }
        }
    };
    Ok(partition.without_empty_pieces(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::{build_threshold_one_way, pure_reservation_max_search, tradeoff_one_way};

    fn b() -> PriceBounds<f64> {
        PriceBounds::new(2.0, 10.0).unwrap()
    }

    fn check(kind: ProblemKind, lambda: f64, p: f64) -> SufficientReport<f64> {
        let phi = match kind {
            ProblemKind::Integral => PiecewiseThreshold::constant(reservation_price(&b(), lambda, p).unwrap(), b()).unwrap(),
            ProblemKind::Fractional => build_threshold_one_way(&b(), lambda, p).unwrap(),
        };
        let part = design_partition(kind, &b(), lambda, p).unwrap();
        check_sufficient_condition(&phi, &part).unwrap()
    }

    #[test]
    fn pure_max_search() {
        let phi_star = pure_reservation_max_search(&b());
        let phi = PiecewiseThreshold::constant(phi_star, b()).unwrap();
        let s = 5f64.sqrt();
        let part = Partition { prices: vec![2.0, phi_star, 10.0], utilizations: vec![0.0, 0.0, 1.0], alphas: vec![s, s] };
        let report = check_sufficient_condition(&phi, &part).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.pieces[0].case, SufficientCase::I);
        assert_eq!(report.pieces[1].case, SufficientCase::III);
    }

    #[test]
    fn lower_branch_one_way() {
        let t = tradeoff_one_way(0.5, 5.0).unwrap();
        let phi = build_threshold_one_way(&b(), 0.5, 2.05).unwrap();
        let part = design_partition(ProblemKind::Fractional, &b(), 0.5, 2.05).unwrap();
        assert_eq!(part.prices.len(), 3);
        let report = check_sufficient_condition(&phi, &part).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.pieces.iter().all(|p| p.case == SufficientCase::II));

        let weak = Partition { alphas: vec![t.eta * 0.9, t.gamma], ..part };
        let report = check_sufficient_condition(&phi, &weak).unwrap();
        let failure = report.first_failure().unwrap();
        assert_eq!((failure.index, failure.case), (1, SufficientCase::II));
        assert!(failure.violation.as_ref().unwrap().contains("inequality"));
    }

    #[test]
    fn every_design_conforms() {
        for kind in [ProblemKind::Integral, ProblemKind::Fractional] {
            for &lambda in &[0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
                for k in 0..=40 {
                    let p = 2.0 + 8.0 * k as f64 / 40.0;
                    let report = check(kind, lambda, p);
                    assert!(report.passed(), "{kind:?} λ={lambda} P={p}: {report:?}");
                }
            }
        }
    }

    #[test]
    fn bad_partitions() {
        let phi = PiecewiseThreshold::constant(4.0, b()).unwrap();
        let cases = [
            Partition { prices: vec![2.0, 10.0], utilizations: vec![0.0, 1.0], alphas: vec![] },
            Partition { prices: vec![3.0, 10.0], utilizations: vec![0.0, 1.0], alphas: vec![2.0] },
            Partition { prices: vec![2.0, 5.0, 4.0, 10.0], utilizations: vec![0.0, 0.0, 1.0, 1.0], alphas: vec![2.0; 3] },
            Partition { prices: vec![2.0, 10.0], utilizations: vec![0.5, 1.0], alphas: vec![2.0] },
            Partition { prices: vec![2.0, 10.0], utilizations: vec![0.0, 1.0], alphas: vec![-1.0] },
        ];
        for part in &cases {
            assert!(matches!(check_sufficient_condition(&phi, part), Err(Error::BadPartition(_))), "{part:?}");
        }
    }

    #[test]
    fn terminal_value_must_be_a_breakpoint() {
        let phi = PiecewiseThreshold::constant(4.0, b()).unwrap();
        let part = Partition { prices: vec![2.0, 5.0, 10.0], utilizations: vec![0.0, 1.0, 1.0], alphas: vec![3.0, 3.0] };
        assert!(!check_sufficient_condition(&phi, &part).unwrap().terminal_ok);
    }
}
