//! Wild-bootstrap portmanteau tests and per-lag confidence bands for the
//! RP and RPV autocorrelations.
//!
//! Replicate `b` multiplies the centered series by i.i.d. multipliers
//! `xi_t` with `E xi = 0`, `E xi^2 = 1`:
//!
//! ```text
//! gamma*(h) = n^-1 sum_{t=1+h}^{n} xi_t c_t xi_{t-h} c_{t-h}
//! ```
//!
//! The nuisance curves behind `c_t` are estimated once, on the data.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::CurveEstimate;
use crate::powercorr::{
    lag_autocov, portmanteau_stat_upto, rp_autocorr, rpv_autocorr, AutocorrSet, CurveSource, Method,
};
use crate::series::{PowerSpec, ReturnSeries};
use crate::streams::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierDist {
    #[default]
    Mammen,
    Rademacher,
}

impl MultiplierDist {
    /// The two support points with their probabilities.
    pub fn support(self) -> [(f64, f64); 2] {
        match self {
            MultiplierDist::Mammen => {
                let s5 = 5f64.sqrt();
                let p_low = 0.5 * (s5 + 1.0) / s5;
                [(-0.5 * (s5 - 1.0), p_low), (0.5 * (s5 + 1.0), 1.0 - p_low)]
            }
            MultiplierDist::Rademacher => [(-1.0, 0.5), (1.0, 0.5)],
        }
    }

    pub fn mean(self) -> f64 {
        self.support().iter().map(|(x, p)| x * p).sum()
    }

    pub fn second_moment(self) -> f64 {
        self.support().iter().map(|(x, p)| x * x * p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let [(low, p_low), (high, _)] = self.support();
        if rng.random::<f64>() < p_low {
            low
        } else {
            high
        }
    }
}

impl std::str::FromStr for MultiplierDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mammen" => Ok(MultiplierDist::Mammen),
            "rademacher" => Ok(MultiplierDist::Rademacher),
            other => Err(Error::InvalidArgument(format!("unknown multiplier '{other}'"))),
        }
    }
}

pub fn draw_multipliers<R: Rng + ?Sized>(n: usize, dist: MultiplierDist, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// One bootstrap autocovariance at lag `h`.
pub fn bootstrap_autocov(centered: &[f64], xi: &[f64], h: usize) -> Result<f64> {
    if centered.len() != xi.len() {
        return Err(Error::LengthMismatch {
            left: centered.len(),
            right: xi.len(),
        });
    }
    if h >= centered.len() {
        return Err(Error::InvalidArgument(format!(
            "lag {h} too large for {} observations",
            centered.len()
        )));
    }
    let u: Vec<f64> = centered.iter().zip(xi).map(|(c, x)| c * x).collect();
    Ok(lag_autocov(&u, h))
}

/// Denominator of the replicate autocorrelations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReplicateScaling {
    /// Divide by the observed `gamma(0)`.
    #[default]
    ObservedGamma0,
    /// Divide by each replicate's own `gamma*(0)`.
    ReplicateGamma0,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub multiplier: MultiplierDist,
    pub alpha: f64,
    pub seed: u64,
    pub scaling: ReplicateScaling,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 3999,
            multiplier: MultiplierDist::Mammen,
            alpha: 0.05,
            seed: 0,
            scaling: ReplicateScaling::ObservedGamma0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 99 {
            return Err(Error::InvalidArgument(format!(
                "at least 99 bootstrap replicates required, got {}",
                self.replicates
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidLevel(self.alpha));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub lag: usize,
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn excludes_observed(&self) -> bool {
        self.rho < self.lower || self.rho > self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapOutcome {
    pub method: Method,
    pub test_lags: usize,
    pub observed_stat: f64,
    pub replicate_stats: Vec<f64>,
    pub p_value: f64,
    pub reject: bool,
    pub bands: Vec<Band>,
    pub replicates: usize,
    pub seed: u64,
    pub multiplier: MultiplierDist,
    pub alpha: f64,
}

impl BootstrapOutcome {
    /// CSV rows `lag, rho_observed, lower, upper`.
    pub fn write_bands_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lag", "rho_observed", "lower", "upper"])?;
        for b in &self.bands {
            w.write_record([
                b.lag.to_string(),
                b.rho.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// `(1 + #{S*_b >= S}) / (B + 1)`.
pub fn bootstrap_p_value(observed: f64, replicate_stats: &[f64]) -> f64 {
    let exceed = replicate_stats.iter().filter(|&&s| s >= observed).count();
    (1 + exceed) as f64 / (replicate_stats.len() + 1) as f64
}

/// Runs the wild bootstrap on an RP or RPV autocorrelation set.
///
/// The portmanteau statistic uses lags `1..=test_lags`; bands are produced
/// for every lag held in `ac`.
pub fn run_test(ac: &AutocorrSet, test_lags: usize, config: &BootstrapConfig) -> Result<BootstrapOutcome> {
    config.validate()?;
    if ac.method == Method::Classical {
        return Err(Error::InvalidArgument(
            "the wild bootstrap applies to RP and RPV statistics".into(),
        ));
    }
    if test_lags == 0 || test_lags > ac.max_lag() {
        return Err(Error::InvalidArgument(format!(
            "test lags {test_lags} outside 1..={}",
            ac.max_lag()
        )));
    }
    let n = ac.n();
    let lags = ac.max_lag();
    let gamma0 = ac.gamma0();
    let observed_stat = portmanteau_stat_upto(ac, test_lags);

    // Row b holds rho*_b(1..=lags).
    let rows: Vec<Vec<f64>> = (0..config.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(config.seed, b as u64);
            let u: Vec<f64> = ac
                .centered
                .iter()
                .map(|c| c * config.multiplier.sample(&mut rng))
                .collect();
            let denom = match config.scaling {
                ReplicateScaling::ObservedGamma0 => gamma0,
                ReplicateScaling::ReplicateGamma0 => lag_autocov(&u, 0),
            };
            (1..=lags).map(|h| lag_autocov(&u, h) / denom).collect()
        })
        .collect();

    let replicate_stats: Vec<f64> = rows
        .iter()
        .map(|row| n as f64 * row[..test_lags].iter().map(|r| r * r).sum::<f64>())
        .collect();
    let p_value = bootstrap_p_value(observed_stat, &replicate_stats);

    let mut column = Vec::with_capacity(rows.len());
    let bands = (0..lags)
        .map(|h| {
            column.clear();
            column.extend(rows.iter().map(|row| row[h]));
            column.sort_by(f64::total_cmp);
            Band {
                lag: h + 1,
                rho: ac.rho[h],
                lower: quantile_sorted(&column, config.alpha / 2.0),
                upper: quantile_sorted(&column, 1.0 - config.alpha / 2.0),
            }
        })
        .collect();

    Ok(BootstrapOutcome {
        method: ac.method,
        test_lags,
        observed_stat,
        replicate_stats,
        p_value,
        reject: p_value <= config.alpha,
        bands,
        replicates: config.replicates,
        seed: config.seed,
        multiplier: config.multiplier,
        alpha: config.alpha,
    })
}

/// Computes the RP or RPV statistic from `curve` and bootstraps it.
///
/// `curve` is `P(a_t = 1)` for RP and `E|r_t|^delta` for RPV.
pub fn run_series_test(
    series: &ReturnSeries,
    spec: &PowerSpec,
    method: Method,
    curve: &CurveEstimate,
    config: &BootstrapConfig,
) -> Result<BootstrapOutcome> {
    let mut ac = match method {
        Method::Rp => rp_autocorr(series, spec, &curve.values)?,
        Method::Rpv => rpv_autocorr(series, spec, &curve.values)?,
        Method::Classical => {
            return Err(Error::InvalidArgument(
                "the wild bootstrap applies to RP and RPV statistics".into(),
            ))
        }
    };
    ac.curve_source = Some(CurveSource::Estimated);
    run_test(&ac, spec.max_lag, config)
}
