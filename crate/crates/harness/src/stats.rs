//! Order statistics for report summaries.

use serde::{Deserialize, Serialize};

/// Sample quantile with linear interpolation between order statistics
/// (`h = (n - 1)p`). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (h - lo as f64)
}

/// Five-number summary with whiskers at the furthest points within
/// 1.5 IQR of the quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub min: f64,
    pub lower_whisker: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub upper_whisker: f64,
    pub max: f64,
    pub mean: f64,
}

impl BoxSummary {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() || samples.iter().any(|x| x.is_nan()) {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        let (q1, median, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
        let fence = 1.5 * (q3 - q1);
        let lower_whisker = s.iter().copied().find(|&x| x >= q1 - fence).unwrap_or(q1).min(q1);
        let upper_whisker = s.iter().rev().copied().find(|&x| x <= q3 + fence).unwrap_or(q3).max(q3);
        Some(Self {
            min: s[0],
            lower_whisker,
            q1,
            median,
            q3,
            upper_whisker,
            max: s[s.len() - 1],
            mean: s.iter().sum::<f64>() / s.len() as f64,
        })
    }

    pub fn is_ordered(&self) -> bool {
        self.min <= self.lower_whisker
            && self.lower_whisker <= self.q1
            && self.q1 <= self.median
            && self.median <= self.q3
            && self.q3 <= self.upper_whisker
            && self.upper_whisker <= self.max
    }
}
