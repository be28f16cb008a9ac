//! Classical, probability-robust (RP) and probability-and-variance-robust
//! (RPV) power autocorrelations.
//!
//! All three share one estimator: given centered values `c_t`,
//!
//! ```text
//! gamma(h) = n^-1 * sum_{t=1+h}^{n} c_t c_{t-h},    rho(h) = gamma(h) / gamma(0)
//! ```
//!
//! and differ only in the centering of `x_t = |r_t|^delta`:
//!
//! * classical: `c_t = x_t - mean(x)`
//! * RP:        `c_t = x_t - mean(x) p_t / mean(p)` with `p_t = P(a_t = 1)`
//! * RPV:       `c_t = x_t - E|r_t|^delta`
//!
//! The nuisance curves may be the true ones (simulation) or kernel estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{CurveEstimate, CurveTarget};
use crate::series::{abs_pow, power_transform, PowerSeries, PowerSpec, ReturnSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Classical,
    Rp,
    Rpv,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Classical, Method::Rp, Method::Rpv];

    pub fn name(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Rp => "rp",
            Method::Rpv => "rpv",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Classical => "Classical",
            Method::Rp => "RP",
            Method::Rpv => "RPV",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" => Ok(Method::Classical),
            "rp" => Ok(Method::Rp),
            "rpv" => Ok(Method::Rpv),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Where the centering curve of an RP/RPV statistic came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSource {
    /// True nuisance supplied by the caller.
    Known,
    /// Kernel estimate.
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrSet {
    pub method: Method,
    pub curve_source: Option<CurveSource>,
    pub delta: f64,
    /// `rho(1), ..., rho(m)`.
    pub rho: Vec<f64>,
    /// `gamma(0), ..., gamma(m)`.
    pub gamma: Vec<f64>,
    #[serde(skip)]
    pub centered: Vec<f64>,
}

impl AutocorrSet {
    pub fn n(&self) -> usize {
        self.centered.len()
    }

    pub fn max_lag(&self) -> usize {
        self.rho.len()
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma[0]
    }

    /// CSV rows `lag, rho, method, delta`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lag", "rho", "method", "delta"])?;
        for (i, r) in self.rho.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                r.to_string(),
                self.method.name().to_string(),
                self.delta.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n^-1 sum_{t=h}^{n-1} c_t c_{t-h}` (0-based indices).
pub(crate) fn lag_autocov(centered: &[f64], h: usize) -> f64 {
    let n = centered.len();
    let s: f64 = centered[h..]
        .iter()
        .zip(&centered[..n - h])
        .map(|(a, b)| a * b)
        .sum();
    s / n as f64
}

fn autocorr_from_centered(
    centered: Vec<f64>,
    max_lag: usize,
    method: Method,
    curve_source: Option<CurveSource>,
    delta: f64,
) -> Result<AutocorrSet> {
    let n = centered.len();
    if max_lag == 0 || max_lag + 2 > n {
        return Err(Error::InvalidSpec(format!(
            "max_lag {max_lag} needs at least {} observations, have {n}",
            max_lag + 2
        )));
    }
    let gamma: Vec<f64> = (0..=max_lag).map(|h| lag_autocov(&centered, h)).collect();
    let g0 = gamma[0];
    if !(g0 > 0.0 && g0.is_finite()) {
        return Err(Error::ZeroVariance);
    }
    let rho = gamma[1..].iter().map(|g| g / g0).collect();
    Ok(AutocorrSet {
        method,
        curve_source,
        delta,
        rho,
        gamma,
        centered,
    })
}

/// Classical power autocorrelations up to lag `m`.
pub fn classical_autocorr(power: &PowerSeries, m: usize) -> Result<AutocorrSet> {
    let x = power.values();
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::ZeroVariance);
    }
    let mean = power.mean();
    let centered = x.iter().map(|v| v - mean).collect();
    autocorr_from_centered(centered, m, Method::Classical, None, power.delta())
}

fn check_curve(curve: &[f64], n: usize) -> Result<f64> {
    if curve.len() != n {
        return Err(Error::CurveLengthMismatch {
            expected: n,
            got: curve.len(),
        });
    }
    if curve.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::NonPositiveCurveMean);
    }
    let mean = curve.iter().sum::<f64>() / n as f64;
    if !(mean > 0.0) {
        return Err(Error::NonPositiveCurveMean);
    }
    Ok(mean)
}

fn rp_centered(power: &PowerSeries, prob_curve: &[f64]) -> Result<Vec<f64>> {
    let p_bar = check_curve(prob_curve, power.len())?;
    let scale = power.mean() / p_bar;
    Ok(power
        .values()
        .iter()
        .zip(prob_curve)
        .map(|(x, p)| x - scale * p)
        .collect())
}

fn rpv_centered(power: &PowerSeries, moment_curve: &[f64]) -> Result<Vec<f64>> {
    check_curve(moment_curve, power.len())?;
    Ok(power
        .values()
        .iter()
        .zip(moment_curve)
        .map(|(x, e)| x - e)
        .collect())
}

/// RP autocorrelations centered by a known probability curve.
pub fn rp_autocorr(series: &ReturnSeries, spec: &PowerSpec, prob_curve: &[f64]) -> Result<AutocorrSet> {
    let power = power_transform(series, spec);
    let centered = rp_centered(&power, prob_curve)?;
    autocorr_from_centered(centered, spec.max_lag, Method::Rp, Some(CurveSource::Known), spec.delta)
}

/// RPV autocorrelations centered by a known power-moment curve.
pub fn rpv_autocorr(series: &ReturnSeries, spec: &PowerSpec, moment_curve: &[f64]) -> Result<AutocorrSet> {
    let power = power_transform(series, spec);
    let centered = rpv_centered(&power, moment_curve)?;
    autocorr_from_centered(centered, spec.max_lag, Method::Rpv, Some(CurveSource::Known), spec.delta)
}

/// Adaptive RP autocorrelations from a kernel estimate of `P(a_t = 1)`.
pub fn rp_autocorr_adaptive(
    series: &ReturnSeries,
    spec: &PowerSpec,
    estimate: &CurveEstimate,
) -> Result<AutocorrSet> {
    if estimate.target != CurveTarget::ZeroProbability {
        return Err(Error::InvalidArgument(
            "RP statistics need a zero-probability curve".into(),
        ));
    }
    let mut ac = rp_autocorr(series, spec, &estimate.values)?;
    ac.curve_source = Some(CurveSource::Estimated);
    Ok(ac)
}

/// Adaptive RPV autocorrelations from a kernel estimate of `E|r_t|^delta`.
pub fn rpv_autocorr_adaptive(
    series: &ReturnSeries,
    spec: &PowerSpec,
    estimate: &CurveEstimate,
) -> Result<AutocorrSet> {
    match estimate.target {
        CurveTarget::PowerMoment { delta } if delta == spec.delta => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "RPV statistics need a power-moment curve with delta = {}",
                spec.delta
            )))
        }
    }
    let mut ac = rpv_autocorr(series, spec, &estimate.values)?;
    ac.curve_source = Some(CurveSource::Estimated);
    Ok(ac)
}

/// `n * sum_h rho(h)^2` over every lag in the set.
pub fn portmanteau_stat(ac: &AutocorrSet) -> f64 {
    portmanteau_stat_upto(ac, ac.max_lag())
}

/// `n * sum_{h <= m} rho(h)^2`.
pub fn portmanteau_stat_upto(ac: &AutocorrSet, m: usize) -> f64 {
    let m = m.min(ac.rho.len());
    ac.n() as f64 * ac.rho[..m].iter().map(|r| r * r).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceKind {
    Rp,
    Rpv,
}

/// Asymptotic variance of `sqrt(n) rho(h)` as a numerator/denominator ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticVariance {
    pub kind: VarianceKind,
    pub numerator: f64,
    pub denominator: f64,
    pub value: f64,
}

impl AsymptoticVariance {
    fn new(kind: VarianceKind, numerator: f64, denominator: f64) -> Result<Self> {
        if !(denominator > 0.0 && denominator.is_finite()) {
            return Err(Error::ZeroVariance);
        }
        Ok(Self {
            kind,
            numerator,
            denominator,
            value: numerator / denominator,
        })
    }
}

const MIN_NONZERO_FOR_MOMENTS: usize = 30;
const PROB_FLOOR: f64 = 0.01;

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Plug-in variance for RP autocorrelations.
///
/// With `M_k = E{|r_t|^{k delta} | a_t = 1}` and `G_k = n^-1 sum_t p_t^k`:
///
/// ```text
/// numerator   = M2^2 G2 - 2 M2 M1^2 G3 + M1^4 G4
/// denominator = M2^2 G1^2 - 2 M2 M1^2 G2 G1 + M1^4 G2^2
/// ```
pub fn plugin_variance_rp(
    series: &ReturnSeries,
    spec: &PowerSpec,
    prob_curve: &[f64],
) -> Result<AsymptoticVariance> {
    let n = series.len();
    check_curve(prob_curve, n)?;
    let nonzero: Vec<f64> = series.nonzero_values().collect();
    if nonzero.len() < MIN_NONZERO_FOR_MOMENTS {
        return Err(Error::TooFewNonzero {
            needed: MIN_NONZERO_FOR_MOMENTS,
            found: nonzero.len(),
        });
    }
    let x: Vec<f64> = nonzero.iter().map(|&r| abs_pow(r, spec.delta)).collect();
    let m1 = mean_of(&x);
    let m2 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let g = |k: i32| prob_curve.iter().map(|p| p.powi(k)).sum::<f64>() / n as f64;
    let (g1, g2, g3, g4) = (g(1), g(2), g(3), g(4));
    let m1sq = m1 * m1;
    let numerator = m2 * m2 * g2 - 2.0 * m2 * m1sq * g3 + m1sq * m1sq * g4;
    let denominator = m2 * m2 * g1 * g1 - 2.0 * m2 * m1sq * g2 * g1 + m1sq * m1sq * g2 * g2;
    AsymptoticVariance::new(VarianceKind::Rp, numerator, denominator)
}

/// Plug-in variance for RPV autocorrelations.
///
/// The moment curve is split as `v_t^delta * p_t` up to a constant, with
/// `v_t^delta = moment_t / max(p_t, 0.01)`; the innovation moments
/// `E{|eta|^{k delta} | a = 1}` are sample means of `(|r_t|^delta / v_t^delta)^k`
/// over nonzero returns. With `H(k, j) = n^-1 sum_t (v_t^delta)^k p_t^j`:
///
/// ```text
/// numerator   = N2^2 H(4,2) - 2 N2 N1^2 H(4,3) + N1^4 H(4,4)
/// denominator = N2^2 H(2,1)^2 - 2 N2 N1^2 H(2,2) H(2,1) + N1^4 H(2,2)^2
/// ```
pub fn plugin_variance_rpv(
    series: &ReturnSeries,
    spec: &PowerSpec,
    moment_curve: &[f64],
    prob_curve: &[f64],
) -> Result<AsymptoticVariance> {
    let n = series.len();
    check_curve(moment_curve, n)?;
    check_curve(prob_curve, n)?;
    let vdelta: Vec<f64> = moment_curve
        .iter()
        .zip(prob_curve)
        .map(|(m, p)| m / p.max(PROB_FLOOR))
        .collect();
    let standardized: Vec<f64> = series
        .values()
        .iter()
        .zip(series.indicators())
        .zip(&vdelta)
        .filter(|((_, &a), &v)| a == 1 && v > 0.0)
        .map(|((&r, _), &v)| abs_pow(r, spec.delta) / v)
        .collect();
    if standardized.len() < MIN_NONZERO_FOR_MOMENTS {
        return Err(Error::TooFewNonzero {
            needed: MIN_NONZERO_FOR_MOMENTS,
            found: standardized.len(),
        });
    }
    let e1 = mean_of(&standardized);
    let e2 = standardized.iter().map(|v| v * v).sum::<f64>() / standardized.len() as f64;
    let h = |k: i32, j: i32| {
        vdelta
            .iter()
            .zip(prob_curve)
            .map(|(v, p)| v.powi(k) * p.powi(j))
            .sum::<f64>()
            / n as f64
    };
    let e1sq = e1 * e1;
    let numerator = e2 * e2 * h(4, 2) - 2.0 * e2 * e1sq * h(4, 3) + e1sq * e1sq * h(4, 4);
    let (h21, h22) = (h(2, 1), h(2, 2));
    let denominator = e2 * e2 * h21 * h21 - 2.0 * e2 * e1sq * h22 * h21 + e1sq * e1sq * h22 * h22;
    AsymptoticVariance::new(VarianceKind::Rpv, numerator, denominator)
}
