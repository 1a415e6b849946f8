//! Right-continuous, non-decreasing piecewise threshold functions on `[0, 1]`.

use std::fmt::Write as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::market::PriceBounds;
use crate::scalar::{eps, sig17, Scalar};

/// Shape of one threshold piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum SegmentShape<T> {
    /// Constant reservation price.
    Flat {
        #[serde(serialize_with = "sig17")]
        level: T,
    },
    /// `L + base · exp(rate · (w - anchor))`.
    Exp {
        #[serde(serialize_with = "sig17")]
        base: T,
        #[serde(serialize_with = "sig17")]
        rate: T,
        #[serde(serialize_with = "sig17")]
        anchor: T,
    },
}

/// One piece of a threshold, defined on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "RawSegment<T>")]
pub struct ThresholdSegment<T> {
    #[serde(serialize_with = "sig17")]
    pub start: T,
    #[serde(serialize_with = "sig17")]
    pub end: T,
    #[serde(flatten)]
    pub shape: SegmentShape<T>,
}

// `flatten` cannot read numbers back under serde_json's arbitrary precision
// mode, so segments deserialize through this flat record.
#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawSegment<T> {
    start: T,
    end: T,
    shape: String,
    level: Option<T>,
    base: Option<T>,
    rate: Option<T>,
    anchor: Option<T>,
}

impl<T: Scalar> TryFrom<RawSegment<T>> for ThresholdSegment<T> {
    type Error = Error;

    fn try_from(raw: RawSegment<T>) -> Result<Self> {
        let shape = match (raw.shape.as_str(), raw.level, raw.base, raw.rate, raw.anchor) {
            ("flat", Some(level), None, None, None) => SegmentShape::Flat { level },
            ("exp", None, Some(base), Some(rate), Some(anchor)) => SegmentShape::Exp { base, rate, anchor },
            _ => return Err(Error::InvalidThreshold(format!("malformed segment of shape {:?}", raw.shape))),
        };
        Ok(Self { start: raw.start, end: raw.end, shape })
    }
}

impl<T: Scalar> ThresholdSegment<T> {
    pub fn flat(start: T, end: T, level: T) -> Self {
        Self { start, end, shape: SegmentShape::Flat { level } }
    }

    /// Exponential piece; a zero `base` degenerates to the flat level `L`
    /// and is stored as such.
    pub fn exp(start: T, end: T, lower: T, base: T, rate: T, anchor: T) -> Self {
        if base == T::zero() {
            Self::flat(start, end, lower)
        } else {
            Self { start, end, shape: SegmentShape::Exp { base, rate, anchor } }
        }
    }

    #[inline]
    pub fn value(&self, w: T, lower: T) -> T {
        match self.shape {
            SegmentShape::Flat { level } => level,
            SegmentShape::Exp { base, rate, anchor } => lower + base * (rate * (w - anchor)).exp(),
        }
    }

    fn width(&self) -> T {
        self.end - self.start
    }

    /// `∫_a^b` of this piece, `start <= a <= b <= end`.
    fn integral(&self, a: T, b: T, lower: T) -> T {
        let width = b - a;
        match self.shape {
            SegmentShape::Flat { level } => level * width,
            SegmentShape::Exp { base, rate, anchor } => {
                lower * width + base / rate * (rate * (a - anchor)).exp() * (rate * width).exp_m1()
            }
        }
    }
}

/// Threshold function `φ : [0, 1] → [L, U]` made of abutting segments.
///
/// Evaluation is right-continuous: at a junction the right segment's value
/// is returned; at `w = 1` the last segment is evaluated at its end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PiecewiseThreshold<T> {
    bounds: PriceBounds<T>,
    segments: Vec<ThresholdSegment<T>>,
}

/// Slack used when validating values computed in floating point.
pub(crate) fn slack<T: Scalar>() -> T {
    T::lit(1e-9).max(eps(1e3))
}

impl<T: Scalar> PiecewiseThreshold<T> {
    /// Builds and validates a threshold. Zero-width segments are dropped.
    pub fn new(segments: Vec<ThresholdSegment<T>>, bounds: PriceBounds<T>) -> Result<Self> {
        let segments: Vec<_> = segments.into_iter().filter(|s| s.width() > T::zero()).collect();
        let threshold = Self { bounds, segments };
        threshold.validate()?;
        Ok(threshold)
    }

    /// Single flat segment at `level` on `[0, 1]`.
    pub fn constant(level: T, bounds: PriceBounds<T>) -> Result<Self> {
        Self::new(vec![ThresholdSegment::flat(T::zero(), T::one(), level)], bounds)
    }

    pub fn bounds(&self) -> &PriceBounds<T> {
        &self.bounds
    }

    pub fn segments(&self) -> &[ThresholdSegment<T>] {
        &self.segments
    }

    /// Checks tiling, shape parameters, monotonicity and range.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidThreshold(m));
        let (lo, hi) = (self.bounds.lower(), self.bounds.upper());
        let tol = slack::<T>() * hi;
        let Some(first) = self.segments.first() else {
            return bad("no segments".into());
        };
        if first.start != T::zero() {
            return bad(format!("first segment starts at {}", first.start));
        }
        if self.segments.last().map(|s| s.end) != Some(T::one()) {
            return bad("last segment does not end at 1".into());
        }
        let mut prev_end: Option<(T, T)> = None;
        for (i, seg) in self.segments.iter().enumerate() {
            if let SegmentShape::Exp { base, rate, anchor } = seg.shape {
                if !(base >= T::zero() && rate > T::zero() && anchor.is_finite()) {
                    return bad(format!("segment {i} has base {base}, rate {rate}"));
                }
            }
            let v0 = seg.value(seg.start, lo);
            let v1 = seg.value(seg.end, lo);
            if !(v0 >= lo - tol && v1 <= hi + tol) || !v0.is_finite() || !v1.is_finite() {
                return bad(format!("segment {i} leaves [L, U]: [{v0}, {v1}]"));
            }
            if let Some((end, left_val)) = prev_end {
                if seg.start != end {
                    return bad(format!("segment {i} starts at {} but previous ends at {end}", seg.start));
                }
                if v0 < left_val - tol {
                    return bad(format!("threshold decreases at w = {end}: {left_val} -> {v0}"));
                }
            }
            prev_end = Some((seg.end, v1));
        }
        Ok(())
    }

    fn check_w(w: T) -> Result<()> {
        if w >= T::zero() && w <= T::one() {
            Ok(())
        } else {
            Err(domain(format!("utilization {w} outside [0, 1]")))
        }
    }

    /// Right-continuous value `φ(w)`.
    pub fn eval(&self, w: T) -> Result<T> {
        Self::check_w(w)?;
        let idx = self.segments.partition_point(|s| s.start <= w).saturating_sub(1);
        Ok(self.segments[idx].value(w, self.bounds.lower()))
    }

    /// Left limit `φ(w⁻)`; equals `φ(0)` at `w = 0`.
    pub fn left_limit(&self, w: T) -> Result<T> {
        Self::check_w(w)?;
        let idx = self.segments.partition_point(|s| s.start < w).saturating_sub(1);
        Ok(self.segments[idx].value(w, self.bounds.lower()))
    }

    pub fn at_zero(&self) -> T {
        self.segments[0].value(T::zero(), self.bounds.lower())
    }

    /// `φ(1)`, the left limit of the last segment.
    pub fn at_one(&self) -> T {
        self.segments[self.segments.len() - 1].value(T::one(), self.bounds.lower())
    }

    /// Closed-form `∫_a^b φ(u) du`.
    pub fn integral(&self, a: T, b: T) -> Result<T> {
        Self::check_w(a)?;
        Self::check_w(b)?;
        if a > b {
            return Err(domain(format!("integral bounds reversed: {a} > {b}")));
        }
        let lower = self.bounds.lower();
        let mut total = T::zero();
        for seg in &self.segments {
            let lo = seg.start.max(a);
            let hi = seg.end.min(b);
            if hi > lo {
                total = total + seg.integral(lo, hi, lower);
            }
        }
        Ok(total)
    }

    /// `sup { u ∈ [0, 1] : φ(u) <= v }`, or `0` when `v < φ(0)`.
    ///
    /// A flat segment whose level equals `v` is consumed entirely, and so
    /// is an exponential one whose end limit matches `v` up to rounding.
    pub fn pseudo_inverse(&self, v: T) -> Result<T> {
        if !self.bounds.contains(v) {
            return Err(domain(format!("price {v} outside the price bounds")));
        }
        let lower = self.bounds.lower();
        let slack = eps::<T>(8.0) * v;
        for seg in &self.segments {
            if seg.value(seg.start, lower) > v {
                return Ok(seg.start);
            }
            if let SegmentShape::Exp { base, rate, anchor } = seg.shape {
                if seg.value(seg.end, lower) > v + slack {
                    let u = anchor + ((v - lower) / base).ln() / rate;
                    return Ok(u.max(seg.start).min(seg.end));
                }
            }
        }
        Ok(T::one())
    }

    /// Prices at which the threshold changes character: every segment's
    /// start value and end limit.
    pub fn critical_prices(&self) -> Vec<T> {
        let lower = self.bounds.lower();
        let mut out = Vec::with_capacity(2 * self.segments.len());
        for seg in &self.segments {
            out.push(seg.value(seg.start, lower));
            out.push(seg.value(seg.end, lower));
        }
        out
    }

    /// JSON description with every number written to 17 significant digits.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("threshold serialization is infallible")
    }

    /// Two-column `w,phi` samples on a uniform grid of `points` values.
    pub fn to_csv(&self, points: usize) -> String {
        let points = points.max(2);
        let mut out = String::from("w,phi\n");
        for i in 0..points {
            let w = T::lit(i as f64 / (points - 1) as f64);
            let v = self.eval(w).expect("grid lies in [0, 1]");
            let _ = writeln!(out, "{:.16e},{:.16e}", w.as_f64(), v.as_f64());
        }
        out
    }
}
