//! Nadaraya-Watson smoothing on the rescaled design `t / n`.
//!
//! Raw weights are `w_tj(b) = (nb)^-1 K((t - j) / (nb))`. With
//! `normalize_weights` (the default) every row is divided by its sum, so the
//! fit is a proper weighted average; otherwise the raw sum is returned.
//! Observations outside `1..=n` simply do not contribute.
//!
//! Bandwidths are chosen by leave-one-out cross-validation over a fixed grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kernel {
    Gaussian,
}

impl Kernel {
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelConfig {
    pub kernel: Kernel,
    /// Candidate bandwidths on the rescaled time axis, ascending.
    pub bandwidth_grid: Vec<f64>,
    /// Skips cross-validation when set.
    pub selected_bandwidth: Option<f64>,
    pub normalize_weights: bool,
    /// Evaluate the CV criterion at every `cv_stride`-th point only.
    pub cv_stride: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Gaussian,
            bandwidth_grid: log_grid(0.005, 0.5, 30),
            selected_bandwidth: None,
            normalize_weights: true,
            cv_stride: 1,
        }
    }
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

impl KernelConfig {
    pub fn with_bandwidth(bandwidth: f64) -> Self {
        Self {
            selected_bandwidth: Some(bandwidth),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidth_grid.is_empty() {
            return Err(Error::InvalidKernelConfig("bandwidth grid is empty".into()));
        }
        if let Some(b) = self
            .bandwidth_grid
            .iter()
            .chain(self.selected_bandwidth.iter())
            .find(|b| !(b.is_finite() && **b > 0.0 && **b < 1.0))
        {
            return Err(Error::InvalidKernelConfig(format!(
                "bandwidth {b} outside (0, 1)"
            )));
        }
        if self.bandwidth_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidKernelConfig(
                "bandwidth grid must be strictly increasing".into(),
            ));
        }
        if self.cv_stride == 0 {
            return Err(Error::InvalidKernelConfig("cv_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Kernel values indexed by the distance `|t - j|`, truncated where they underflow.
struct WeightTable {
    raw: Vec<f64>,
}

impl WeightTable {
    fn new(n: usize, b: f64, kernel: Kernel) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::DegenerateBandwidth { bandwidth: b });
        }
        let nb = n as f64 * b;
        let mut raw = Vec::with_capacity(n.min(1024));
        for k in 0..n {
            let w = kernel.eval(k as f64 / nb) / nb;
            if w == 0.0 {
                break;
            }
            raw.push(w);
        }
        if raw.is_empty() {
            return Err(Error::DegenerateBandwidth { bandwidth: b });
        }
        Ok(Self { raw })
    }

    fn reach(&self) -> usize {
        self.raw.len() - 1
    }

    fn at(&self, k: usize) -> f64 {
        self.raw[k]
    }
}

/// Raw or normalized weights of row `t` (1-based) over `j = 1..=n`.
pub fn kernel_weights(t: usize, n: usize, b: f64, config: &KernelConfig) -> Result<Vec<f64>> {
    if t == 0 || t > n {
        return Err(Error::InvalidArgument(format!("row {t} outside 1..={n}")));
    }
    let nb = n as f64 * b;
    if !(nb.is_finite() && nb > 0.0) {
        return Err(Error::DegenerateBandwidth { bandwidth: b });
    }
    let mut w: Vec<f64> = (1..=n)
        .map(|j| config.kernel.eval((t as f64 - j as f64) / nb) / nb)
        .collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 || !total.is_finite() {
        return Err(Error::DegenerateBandwidth { bandwidth: b });
    }
    if config.normalize_weights {
        w.iter_mut().for_each(|x| *x /= total);
    }
    Ok(w)
}

/// Fitted values `sum_j w_tj(b) y_j` for every `t`.
pub fn smooth(response: &[f64], b: f64, config: &KernelConfig) -> Result<Vec<f64>> {
    let n = response.len();
    if n < 2 {
        return Err(Error::InvalidArgument("smoothing needs at least two points".into()));
    }
    let table = WeightTable::new(n, b, config.kernel)?;
    let reach = table.reach();
    let mut fitted = Vec::with_capacity(n);
    for t in 0..n {
        let lo = t.saturating_sub(reach);
        let hi = (t + reach).min(n - 1);
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, &y) in response.iter().enumerate().take(hi + 1).skip(lo) {
            let w = table.at(t.abs_diff(j));
            num += w * y;
            den += w;
        }
        if den == 0.0 {
            return Err(Error::DegenerateBandwidth { bandwidth: b });
        }
        fitted.push(if config.normalize_weights { num / den } else { num });
    }
    Ok(fitted)
}

/// Leave-one-out criterion `sum_t (fit_{-t}(t) - y_t)^2` at bandwidth `b`.
///
/// The response is shifted by its first value before fitting; this is exact
/// in real arithmetic and makes constant responses score exactly zero.
pub fn cv_objective(response: &[f64], b: f64, config: &KernelConfig) -> Result<f64> {
    let n = response.len();
    if n < 3 {
        return Err(Error::InvalidArgument("cross-validation needs n >= 3".into()));
    }
    let table = WeightTable::new(n, b, config.kernel)?;
    let reach = table.reach();
    let shift = response[0];
    let stride = config.cv_stride.max(1);
    let mut score = 0.0;
    for t in (0..n).step_by(stride) {
        let lo = t.saturating_sub(reach);
        let hi = (t + reach).min(n - 1);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in lo..=hi {
            if j == t {
                continue;
            }
            let w = table.at(t.abs_diff(j));
            num += w * (response[j] - shift);
            den += w;
        }
        if den == 0.0 {
            return Err(Error::DegenerateBandwidth { bandwidth: b });
        }
        let loo = if config.normalize_weights { num / den } else { num };
        let resid = loo - (response[t] - shift);
        score += resid * resid;
    }
    Ok(score)
}

/// Grid minimizer of [`cv_objective`]; ties go to the smaller bandwidth.
pub fn loocv_bandwidth(response: &[f64], config: &KernelConfig) -> Result<(f64, f64)> {
    config.validate()?;
    let scores: Vec<Result<f64>> = config
        .bandwidth_grid
        .par_iter()
        .map(|&b| cv_objective(response, b, config))
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for (&b, score) in config.bandwidth_grid.iter().zip(scores) {
        match score {
            Ok(s) if s.is_finite() => {
                if best.is_none_or(|(_, cur)| s < cur) {
                    best = Some((b, s));
                }
            }
            Ok(_) | Err(Error::DegenerateBandwidth { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(Error::AllBandwidthsDegenerate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveTarget {
    ZeroProbability,
    PowerMoment { delta: f64 },
}

/// A smoothed nuisance curve on the sample grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveEstimate {
    pub target: CurveTarget,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub cv_score: f64,
}

impl CurveEstimate {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with columns `t, u, fitted`; the bandwidth goes in a comment line.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# bandwidth={} cv_score={}", self.bandwidth, self.cv_score)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "u", "fitted"])?;
        let n = self.values.len();
        for (i, v) in self.values.iter().enumerate() {
            let t = i + 1;
            w.write_record([
                t.to_string(),
                (t as f64 / n as f64).to_string(),
                v.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn estimate_curve(response: &[f64], config: &KernelConfig, target: CurveTarget) -> Result<CurveEstimate> {
    config.validate()?;
    let (bandwidth, cv_score) = match config.selected_bandwidth {
        Some(b) => (b, cv_objective(response, b, config)?),
        None => loocv_bandwidth(response, config)?,
    };
    let mut values = smooth(response, bandwidth, config)?;
    if target == CurveTarget::ZeroProbability {
        values.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
    }
    Ok(CurveEstimate {
        target,
        values,
        bandwidth,
        cv_score,
    })
}

/// Smoothed `P(a_t = 1)`.
pub fn estimate_probability(series: &crate::ReturnSeries, config: &KernelConfig) -> Result<CurveEstimate> {
    estimate_curve(&series.indicators_f64(), config, CurveTarget::ZeroProbability)
}

/// Smoothed `E|r_t|^delta`.
pub fn estimate_power_moment(
    series: &crate::ReturnSeries,
    spec: &crate::PowerSpec,
    config: &KernelConfig,
) -> Result<CurveEstimate> {
    let power = crate::power_transform(series, spec);
    estimate_curve(
        power.values(),
        config,
        CurveTarget::PowerMoment { delta: spec.delta },
    )
}
