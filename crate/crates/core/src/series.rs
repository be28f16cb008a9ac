//! Observed return series, zero indicators and power transforms.
//!
//! A series is stored as observed: positions with `|r_t| <= eps` are set to
//! exactly zero and flagged `a_t = 0`. Time is positional; the kernel
//! smoothers work on the rescaled design `t / n`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Observed returns together with their nonzero indicators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSeries {
    values: Vec<f64>,
    indicators: Vec<u8>,
    zero_threshold: f64,
}

impl ReturnSeries {
    /// Validates `raw` and derives the indicators `a_t = 1{|r_t| > eps}`.
    pub fn new(raw: &[f64], zero_threshold: f64) -> Result<Self> {
        build_series(raw, zero_threshold)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn indicators(&self) -> &[u8] {
        &self.indicators
    }

    pub fn zero_threshold(&self) -> f64 {
        self.zero_threshold
    }

    /// Indicators as floats, the response for the zero-probability smoother.
    pub fn indicators_f64(&self) -> Vec<f64> {
        self.indicators.iter().map(|&a| f64::from(a)).collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.indicators.iter().filter(|&&a| a == 1).count()
    }

    /// Share of observations equal to zero.
    pub fn zero_fraction(&self) -> f64 {
        1.0 - self.nonzero_count() as f64 / self.len() as f64
    }

    /// The nonzero observations, in time order.
    pub fn nonzero_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.indicators)
            .filter(|(_, &a)| a == 1)
            .map(|(&r, _)| r)
    }

    /// Multiplies every return by `factor`, keeping the indicators.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        Ok(Self {
            values: self.values.iter().map(|r| r * factor).collect(),
            indicators: self.indicators.clone(),
            zero_threshold: self.zero_threshold * factor,
        })
    }
}

/// Builds a validated [`ReturnSeries`], coercing sub-threshold values to zero.
pub fn build_series(raw: &[f64], zero_threshold: f64) -> Result<ReturnSeries> {
    if !(zero_threshold.is_finite() && zero_threshold >= 0.0) {
        return Err(Error::InvalidThreshold(zero_threshold));
    }
    if raw.is_empty() {
        return Err(Error::EmptySeries);
    }
    if let Some(index) = raw.iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    if raw.len() < 2 {
        return Err(Error::InvalidArgument(
            "a return series needs at least two observations".into(),
        ));
    }
    let mut values = Vec::with_capacity(raw.len());
    let mut indicators = Vec::with_capacity(raw.len());
    for &r in raw {
        if r.abs() > zero_threshold {
            values.push(r);
            indicators.push(1);
        } else {
            values.push(0.0);
            indicators.push(0);
        }
    }
    if indicators.iter().all(|&a| a == 0) {
        return Err(Error::AllZero);
    }
    Ok(ReturnSeries {
        values,
        indicators,
        zero_threshold,
    })
}

/// Power exponent and number of lags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSpec {
    pub delta: f64,
    pub max_lag: usize,
}

impl Default for PowerSpec {
    fn default() -> Self {
        Self {
            delta: 1.0,
            max_lag: 5,
        }
    }
}

impl PowerSpec {
    pub fn new(delta: f64, max_lag: usize) -> Result<Self> {
        let spec = Self { delta, max_lag };
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidSpec(format!("delta must be positive, got {delta}")));
        }
        if max_lag == 0 {
            return Err(Error::InvalidSpec("max_lag must be at least 1".into()));
        }
        Ok(spec)
    }

    /// Checks `1 <= m <= n - 2` for a series of length `n`.
    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.max_lag == 0 || self.max_lag + 2 > n {
            return Err(Error::InvalidSpec(format!(
                "max_lag {} requires at least {} observations, series has {n}",
                self.max_lag,
                self.max_lag + 2
            )));
        }
        Ok(())
    }
}

/// `|r_t|^delta` with its sample mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    values: Vec<f64>,
    mean: f64,
    delta: f64,
}

impl PowerSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn abs_pow(r: f64, delta: f64) -> f64 {
    if delta == 1.0 {
        r.abs()
    } else if delta == 2.0 {
        r * r
    } else {
        r.abs().powf(delta)
    }
}

pub fn power_transform(series: &ReturnSeries, spec: &PowerSpec) -> PowerSeries {
    let values: Vec<f64> = series
        .values()
        .iter()
        .map(|&r| abs_pow(r, spec.delta))
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    PowerSeries {
        values,
        mean,
        delta: spec.delta,
    }
}
