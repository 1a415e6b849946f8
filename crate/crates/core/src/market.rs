//! Market model, price sequences, execution traces and the offline benchmark.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sig17, Scalar};

/// Known price range `[L, U]` of the exchange rate.
///
/// The fluctuation ratio `θ = U / L` is always derived from the two bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBounds<T>", bound = "T: Scalar")]
pub struct PriceBounds<T> {
    #[serde(serialize_with = "sig17")]
    lower: T,
    #[serde(serialize_with = "sig17")]
    upper: T,
}

#[derive(Deserialize)]
struct RawBounds<T> {
    lower: T,
    upper: T,
}

impl<T: Scalar> TryFrom<RawBounds<T>> for PriceBounds<T> {
    type Error = Error;

    fn try_from(raw: RawBounds<T>) -> Result<Self> {
        PriceBounds::new(raw.lower, raw.upper)
    }
}

impl<T: Scalar> PriceBounds<T> {
    pub fn new(lower: T, upper: T) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower > T::zero() && lower <= upper) {
            return Err(Error::InvalidBounds { lower: lower.as_f64(), upper: upper.as_f64() });
        }
        Ok(Self { lower, upper })
    }

    /// Bounds `[L, θL]`.
    pub fn from_theta(lower: T, theta: T) -> Result<Self> {
        Self::new(lower, lower * theta)
    }

    #[inline]
    pub fn lower(&self) -> T {
        self.lower
    }

    #[inline]
    pub fn upper(&self) -> T {
        self.upper
    }

    #[inline]
    pub fn theta(&self) -> T {
        self.upper / self.lower
    }

    #[inline]
    pub fn contains(&self, price: T) -> bool {
        price >= self.lower && price <= self.upper
    }

    pub fn clamp(&self, price: T) -> T {
        price.max(self.lower).min(self.upper)
    }

    pub(crate) fn check_prediction(&self, prediction: T) -> Result<()> {
        if self.contains(prediction) {
            Ok(())
        } else {
            Err(Error::PredictionOutOfBounds(prediction.as_f64()))
        }
    }
}

/// Integral (1-max-search) or fractional (one-way trading) conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Whole dollar converted in a single transaction.
    Integral,
    /// Dollar may be converted fraction by fraction.
    Fractional,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Integral => "1-max-search",
            ProblemKind::Fractional => "one-way-trading",
        }
    }
}

/// A price sequence `v_1, ..., v_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance<T> {
    prices: Vec<T>,
}

impl<T: Scalar> Instance<T> {
    /// Wraps a price sequence without validating it.
    pub fn new(prices: Vec<T>) -> Self {
        Self { prices }
    }

    pub fn prices(&self) -> &[T] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Maximum price `V`, `None` for an empty sequence.
    pub fn max_price(&self) -> Option<T> {
        self.prices.iter().copied().reduce(T::max)
    }

    pub fn into_prices(self) -> Vec<T> {
        self.prices
    }
}

/// Checks that the instance is non-empty and every price lies in `[L, U]`.
pub fn validate_instance<T: Scalar>(inst: Instance<T>, bounds: &PriceBounds<T>) -> Result<Instance<T>> {
    if inst.is_empty() {
        return Err(Error::EmptyInstance);
    }
    if let Some((index, &value)) = inst.prices.iter().enumerate().find(|(_, &v)| !bounds.contains(v)) {
        return Err(Error::OutOfBounds { index, value: value.as_f64() });
    }
    Ok(inst)
}

/// Return of the offline optimum: the whole dollar converted at the maximum price.
pub fn offline_opt<T: Scalar>(inst: &Instance<T>) -> Result<T> {
    inst.max_price().ok_or(Error::EmptyInstance)
}

/// Empirical profit ratio `OPT / ALG`.
pub fn profit_ratio<T: Scalar>(opt: T, alg: T) -> Result<T> {
    if alg > T::zero() {
        Ok(opt / alg)
    } else {
        Err(Error::NonPositiveProfit(alg.as_f64()))
    }
}

/// Step-by-step record of running a policy over an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace<T> {
    pub prices: Vec<T>,
    /// Fraction of the initial dollar converted at each step; the last entry
    /// includes the compulsory conversion.
    pub allocations: Vec<T>,
    /// `w^(0), ..., w^(N)`.
    pub utilization_path: Vec<T>,
    pub profit: T,
    /// Amount converted at the final price because the horizon ran out.
    pub compulsory_amount: T,
}

impl<T: Scalar> ExecutionTrace<T> {
    /// Utilization before the compulsory step, `w^(N-1)`.
    pub fn pre_compulsory_utilization(&self) -> T {
        let n = self.utilization_path.len();
        self.utilization_path[n.saturating_sub(2)]
    }

    /// CSV with header `step,price,allocation,utilization,cumulative_profit`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,price,allocation,utilization,cumulative_profit\n");
        let mut cumulative = T::zero();
        for (n, (&v, &x)) in self.prices.iter().zip(&self.allocations).enumerate() {
            cumulative = cumulative + v * x;
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e}",
                n + 1,
                v.as_f64(),
                x.as_f64(),
                self.utilization_path[n + 1].as_f64(),
                cumulative.as_f64()
            );
        }
        out
    }
}
