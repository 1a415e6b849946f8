//! Price series input and windowing.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use ota_core::{Instance64, PriceBounds64};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub price: f64,
}

fn parse_timestamp(text: &str) -> Option<i64> {
    let text = text.trim();
    if let Ok(secs) = text.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(t.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(t.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc().timestamp())
}

/// Reads `timestamp,price` rows. The first row is a header and is skipped
/// whatever its column names.
pub fn parse_prices<R: Read>(reader: R) -> Result<Vec<PricePoint>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let mut out: Vec<PricePoint> = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(HarnessError::Parse { line, msg: format!("expected 2 fields, found {}", record.len()) });
        }
        let timestamp = parse_timestamp(&record[0])
            .ok_or_else(|| HarnessError::Parse { line, msg: format!("bad timestamp {:?}", &record[0]) })?;
        let price: f64 = record[1]
            .parse()
            .map_err(|_| HarnessError::Parse { line, msg: format!("bad price {:?}", &record[1]) })?;
        if !price.is_finite() {
            return Err(HarnessError::Parse { line, msg: format!("bad price {:?}", &record[1]) });
        }
        if price <= 0.0 {
            return Err(HarnessError::NonPositivePrice { line });
        }
        if out.last().is_some_and(|prev| timestamp < prev.timestamp) {
            return Err(HarnessError::UnsortedData { line });
        }
        out.push(PricePoint { timestamp, price });
    }
    Ok(out)
}

pub fn load_prices(path: impl AsRef<Path>) -> Result<Vec<PricePoint>> {
    parse_prices(File::open(path)?)
}

pub fn write_prices<W: std::io::Write>(writer: W, points: &[PricePoint]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["timestamp", "price"])?;
    for p in points {
        csv.write_record([p.timestamp.to_string(), p.price.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

/// Windows of `window_len` ticks starting every `stride` ticks; a trailing
/// partial window is dropped.
pub fn make_windows(prices: &[f64], window_len: usize, stride: usize) -> Result<Vec<Instance64>> {
    if window_len < 2 || stride < 1 {
        return Err(HarnessError::Config(format!("window {window_len} and stride {stride} need window >= 2, stride >= 1")));
    }
    if window_len > prices.len() {
        return Err(HarnessError::WindowTooLong { window: window_len, len: prices.len() });
    }
    Ok((0..=(prices.len() - window_len) / stride)
        .map(|k| Instance64::new(prices[k * stride..k * stride + window_len].to_vec()))
        .collect())
}

/// `[0.95 min, 1.05 max]` of the series.
pub fn derive_bounds(prices: &[f64]) -> Result<PriceBounds64> {
    let min = prices.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = prices.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if prices.is_empty() {
        return Err(HarnessError::Config("empty price series".into()));
    }
    Ok(PriceBounds64::new(0.95 * min, 1.05 * max)?)
}
