//! Simulation designs for the Monte Carlo study.
//!
//! Latent returns are `r~_t = sigma_t eta_t` with `eta_t ~ N(0, 1)`:
//!
//! * `ConstantUnit`: `sigma_t = 1`;
//! * `Garch11`: `sigma_t^2 = omega + alpha r~_{t-1}^2 + beta sigma_{t-1}^2`;
//! * `VarianceShift`: `sigma_t = v(t/n)`, a ramp from 1 to 2 on (0.4, 0.6].
//!
//! Observed returns are `r_t = a_t r~_t`. For the constant and shifted
//! volatility designs `a_t = a1_t a2_t`, where `a1_t` is Bernoulli with the
//! configured probability path and `a2_t = 1{|eta_t| > c}` thins small
//! innovations. The GARCH design censors every return below the median.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::series::{build_series, ReturnSeries};

/// Thinning threshold with `P(|eta| > c) = 0.9`, the 0.55 normal quantile.
pub const THINNING_THRESHOLD: f64 = 0.125_661_346_855_074_1;
/// The literal threshold of the original design; it removes about 5% of draws.
pub const LITERAL_THINNING_THRESHOLD: f64 = 0.063;
pub const GARCH_BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Volatility {
    ConstantUnit,
    Garch11 { omega: f64, alpha: f64, beta: f64 },
    VarianceShift,
}

impl Volatility {
    pub fn garch_default() -> Self {
        Volatility::Garch11 {
            omega: 0.01,
            alpha: 0.1,
            beta: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbabilityPath {
    Constant { p: f64 },
    ProbShift,
}

impl ProbabilityPath {
    /// Probability of `a1_t = 1` at rescaled time `u`.
    pub fn at(&self, u: f64) -> f64 {
        match *self {
            ProbabilityPath::Constant { p } => p,
            ProbabilityPath::ProbShift => shift_probability(u),
        }
    }
}

/// `0.2` on (0, 0.4], linear `3.5u - 1.2` on (0.4, 0.6], `0.9` on (0.6, 1].
pub fn shift_probability(u: f64) -> f64 {
    if u <= 0.4 {
        0.2
    } else if u <= 0.6 {
        (3.5 * u - 1.2).clamp(0.2, 0.9)
    } else {
        0.9
    }
}

/// `1` on (0, 0.4], linear `5u - 1` on (0.4, 0.6], `2` on (0.6, 1].
pub fn shift_volatility(u: f64) -> f64 {
    if u <= 0.4 {
        1.0
    } else if u <= 0.6 {
        (5.0 * u - 1.0).clamp(1.0, 2.0)
    } else {
        2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MedianKind {
    /// Median of the simulated path.
    #[default]
    Sample,
    /// Zero, the median of the symmetric stationary law.
    Population,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub volatility: Volatility,
    pub probability: ProbabilityPath,
    pub thinning: bool,
    pub thinning_threshold: f64,
    /// GARCH design only: `a_t = 0` iff `r~_t` is below the median.
    pub garch_censor: bool,
    pub median: MedianKind,
    pub n: usize,
    pub seed: u64,
    /// Power used for the closed-form moment curve attached to the panel.
    pub moment_delta: f64,
}

impl DgpConfig {
    pub fn new(volatility: Volatility, probability: ProbabilityPath, n: usize, seed: u64) -> Self {
        let garch = matches!(volatility, Volatility::Garch11 { .. });
        Self {
            volatility,
            probability,
            thinning: !garch,
            thinning_threshold: THINNING_THRESHOLD,
            garch_censor: garch,
            median: MedianKind::Sample,
            n,
            seed,
            moment_delta: 1.0,
        }
    }

    /// Named designs: `a1`, `a2`, `c1`, `c2` (volatility letter, probability
    /// regime digit) and `b` (GARCH with median censoring).
    pub fn preset(name: &str, n: usize, seed: u64) -> Result<Self> {
        let constant = ProbabilityPath::Constant { p: 0.5 };
        let (vol, prob) = match name.to_ascii_lowercase().replace(['-', '(', ')'], "").as_str() {
            "a1" => (Volatility::ConstantUnit, constant),
            "a2" => (Volatility::ConstantUnit, ProbabilityPath::ProbShift),
            "c1" => (Volatility::VarianceShift, constant),
            "c2" => (Volatility::VarianceShift, ProbabilityPath::ProbShift),
            "b" | "b1" => (Volatility::garch_default(), constant),
            other => return Err(Error::InvalidConfig(format!("unknown design '{other}'"))),
        };
        let cfg = Self::new(vol, prob, n, seed);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidConfig(format!("n must be >= 10, got {}", self.n)));
        }
        if let Volatility::Garch11 { omega, alpha, beta } = self.volatility {
            if !(omega > 0.0 && alpha >= 0.0 && beta >= 0.0) {
                return Err(Error::InvalidConfig("GARCH parameters must be nonnegative, omega > 0".into()));
            }
            if alpha + beta >= 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "GARCH alpha + beta = {} is not < 1",
                    alpha + beta
                )));
            }
        } else if self.garch_censor {
            return Err(Error::InvalidConfig("median censoring only applies to the GARCH design".into()));
        }
        if let ProbabilityPath::Constant { p } = self.probability {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidConfig(format!("probability {p} outside (0, 1]")));
            }
        }
        if !(self.thinning_threshold.is_finite() && self.thinning_threshold >= 0.0) {
            return Err(Error::InvalidConfig("thinning threshold must be >= 0".into()));
        }
        if !(self.moment_delta > 0.0) {
            return Err(Error::InvalidConfig("moment_delta must be positive".into()));
        }
        Ok(())
    }

    fn garch(&self) -> Option<(f64, f64, f64)> {
        match self.volatility {
            Volatility::Garch11 { omega, alpha, beta } => Some((omega, alpha, beta)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedPanel {
    pub latent: Vec<f64>,
    pub observed: ReturnSeries,
    pub true_prob_curve: Vec<f64>,
    pub true_moment_curve: Option<Vec<f64>>,
}

impl SimulatedPanel {
    /// CSV with columns `t, latent, observed, a, true_prob`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "latent", "observed", "a", "true_prob"])?;
        for (i, ((l, r), (a, p))) in self
            .latent
            .iter()
            .zip(self.observed.values())
            .zip(self.observed.indicators().iter().zip(&self.true_prob_curve))
            .enumerate()
        {
            w.write_record([
                (i + 1).to_string(),
                l.to_string(),
                r.to_string(),
                a.to_string(),
                p.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// `P(|eta| > c)` for a standard normal `eta`.
pub fn thinning_keep_probability(c: f64) -> f64 {
    2.0 * normal().sf(c)
}

/// `E(|eta|^delta | |eta| > c)` for a standard normal `eta`.
///
/// Uses `E(|eta|^d 1{|eta| > c}) = 2^{d/2} Gamma((d+1)/2, c^2/2) / sqrt(pi)`.
pub fn thinned_abs_moment(delta: f64, c: f64) -> f64 {
    let s = (delta + 1.0) / 2.0;
    let x = c * c / 2.0;
    let upper = if x > 0.0 { gamma_ur(s, x) * gamma(s) } else { gamma(s) };
    let partial = 2f64.powf(delta / 2.0) * upper / std::f64::consts::PI.sqrt();
    partial / thinning_keep_probability(c)
}

fn rescaled(t: usize, n: usize) -> f64 {
    t as f64 / n as f64
}

/// Closed-form `P(a_t = 1)` and, outside the GARCH design, `E|r_t|^delta`.
pub fn true_curves(config: &DgpConfig, delta: f64) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    config.validate()?;
    let n = config.n;
    if config.garch_censor {
        return Ok((vec![0.5; n], None));
    }
    let keep = if config.thinning {
        thinning_keep_probability(config.thinning_threshold)
    } else {
        1.0
    };
    let prob: Vec<f64> = (1..=n)
        .map(|t| config.probability.at(rescaled(t, n)) * keep)
        .collect();
    if config.garch().is_some() {
        return Ok((prob, None));
    }
    let c = if config.thinning { config.thinning_threshold } else { 0.0 };
    let eta_moment = thinned_abs_moment(delta, c);
    let moment = (1..=n)
        .zip(&prob)
        .map(|(t, p)| {
            let v = match config.volatility {
                Volatility::VarianceShift => shift_volatility(rescaled(t, n)),
                _ => 1.0,
            };
            v.powf(delta) * p * eta_moment
        })
        .collect();
    Ok((prob, Some(moment)))
}

/// Power-moment curve; fails for the GARCH design.
pub fn true_moment_curve(config: &DgpConfig, delta: f64) -> Result<Vec<f64>> {
    if config.garch().is_some() {
        return Err(Error::UnsupportedForGarch);
    }
    true_curves(config, delta)?.1.ok_or(Error::UnsupportedForGarch)
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
    }
}

pub fn generate(config: &DgpConfig) -> Result<SimulatedPanel> {
    config.validate()?;
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let (latent, eta) = match config.garch() {
        Some((omega, alpha, beta)) => {
            let mut var = omega / (1.0 - alpha - beta);
            let mut prev = 0.0f64;
            let mut latent = Vec::with_capacity(n);
            let mut eta = Vec::with_capacity(n);
            for step in 0..GARCH_BURN_IN + n {
                if step > 0 {
                    var = omega + alpha * prev * prev + beta * var;
                }
                let e: f64 = rng.sample(StandardNormal);
                prev = var.sqrt() * e;
                if step >= GARCH_BURN_IN {
                    latent.push(prev);
                    eta.push(e);
                }
            }
            (latent, eta)
        }
        None => {
            let eta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let latent = eta
                .iter()
                .enumerate()
                .map(|(i, e)| match config.volatility {
                    Volatility::VarianceShift => shift_volatility(rescaled(i + 1, n)) * e,
                    _ => *e,
                })
                .collect();
            (latent, eta)
        }
    };

    let indicators: Vec<bool> = if config.garch_censor {
        let cut = match config.median {
            MedianKind::Sample => median(&latent),
            MedianKind::Population => 0.0,
        };
        latent.iter().map(|&r| r >= cut).collect()
    } else {
        eta.iter()
            .enumerate()
            .map(|(i, e)| {
                let p = config.probability.at(rescaled(i + 1, n));
                let trade = rng.random::<f64>() < p;
                let thinned = config.thinning && e.abs() <= config.thinning_threshold;
                trade && !thinned
            })
            .collect()
    };

    let observed: Vec<f64> = latent
        .iter()
        .zip(&indicators)
        .map(|(&r, &a)| if a { r } else { 0.0 })
        .collect();
    let observed = build_series(&observed, 0.0)?;
    let (true_prob_curve, true_moment_curve) = true_curves(config, config.moment_delta)?;
    Ok(SimulatedPanel {
        latent,
        observed,
        true_prob_curve,
        true_moment_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on [lo, hi].
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
        let h = (hi - lo) / steps as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..steps {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn phi(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn thinning_probabilities() {
        // Integrate the density over [-c, c] rather than trusting the CDF.
        let cut = simpson(phi, -THINNING_THRESHOLD, THINNING_THRESHOLD, 2000);
        assert!((cut - 0.10).abs() < 1e-9);
        assert!((thinning_keep_probability(THINNING_THRESHOLD) - 0.9).abs() < 1e-12);
        let literal = simpson(phi, -LITERAL_THINNING_THRESHOLD, LITERAL_THINNING_THRESHOLD, 2000);
        assert!((literal - 0.0502).abs() < 1e-3);
    }

    #[test]
    fn conditional_moment_matches_quadrature() {
        for &delta in &[0.5, 1.0, 2.0, 3.0] {
            for &c in &[0.0, LITERAL_THINNING_THRESHOLD, THINNING_THRESHOLD, 1.0] {
                let lo = c.max(1e-12);
                let num = 2.0 * simpson(|x| x.powf(delta) * phi(x), lo, 40.0, 400_000);
                let den = 2.0 * simpson(phi, lo, 40.0, 400_000);
                let oracle = num / den;
                let got = thinned_abs_moment(delta, c);
                assert!((got - oracle).abs() < 1e-6 * oracle, "delta={delta} c={c}: {got} vs {oracle}");
            }
        }
        assert!((thinned_abs_moment(2.0, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn piecewise_paths() {
        assert_eq!(shift_probability(0.2), 0.2);
        assert!((shift_probability(0.5) - 0.55).abs() < 1e-12);
        assert_eq!(shift_probability(0.9), 0.9);
        assert_eq!(shift_volatility(0.3), 1.0);
        assert!((shift_volatility(0.6) - 2.0).abs() < 1e-12);
        let grid: Vec<f64> = (1..=1000).map(|t| shift_probability(t as f64 / 1000.0)).collect();
        assert!(grid.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn a1_zero_fraction() {
        let panel = generate(&DgpConfig::preset("a1", 100_000, 11).unwrap()).unwrap();
        assert!((panel.observed.zero_fraction() - 0.55).abs() < 0.01);
        for (l, (r, a)) in panel
            .latent
            .iter()
            .zip(panel.observed.values().iter().zip(panel.observed.indicators()))
        {
            assert_eq!(*r, l * f64::from(*a));
        }
    }

    #[test]
    fn garch_median_censoring_and_variance() {
        let panel = generate(&DgpConfig::preset("b", 100_000, 3).unwrap()).unwrap();
        let zf = panel.observed.zero_fraction();
        assert!(zf > 0.49 && zf < 0.51, "{zf}");
        let n = panel.latent.len() as f64;
        let mean = panel.latent.iter().sum::<f64>() / n;
        let var = panel.latent.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 0.1).abs() < 0.02, "{var}");
    }

    #[test]
    fn closed_form_curves() {
        let c2 = DgpConfig::preset("c2", 1000, 0).unwrap();
        let (prob, moment) = true_curves(&c2, 1.0).unwrap();
        assert!((prob[899] - 0.81).abs() < 1e-12);
        assert!((prob[199] - 0.18).abs() < 1e-12);
        let moment = moment.unwrap();
        for delta in [1.0, 2.0] {
            let m = true_moment_curve(&c2, delta).unwrap();
            let ratio = m[899] / m[199];
            let expected = 2f64.powf(delta) * prob[899] / prob[199];
            assert!((ratio - expected).abs() < 1e-12);
        }
        assert_eq!(moment.len(), 1000);

        let a1 = DgpConfig::preset("a1", 50, 0).unwrap();
        let m = true_moment_curve(&a1, 1.0).unwrap();
        assert!(m.iter().all(|v| (v - m[0]).abs() < 1e-15));
        assert!(m[0] > 0.35 && m[0] < 0.45);

        let b = DgpConfig::preset("b", 50, 0).unwrap();
        assert_eq!(true_moment_curve(&b, 1.0), Err(Error::UnsupportedForGarch));
        let (p, m) = true_curves(&b, 1.0).unwrap();
        assert!(p.iter().all(|&x| x == 0.5) && m.is_none());
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let cfg = DgpConfig::preset("c2", 500, 99).unwrap();
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = DgpConfig { seed: 100, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap().latent, generate(&other).unwrap().latent);
    }

    #[test]
    fn invalid_designs() {
        assert!(DgpConfig::preset("z9", 100, 0).is_err());
        assert!(DgpConfig::preset("a1", 5, 0).is_err());
        let mut cfg = DgpConfig::preset("b", 100, 0).unwrap();
        cfg.volatility = Volatility::Garch11 { omega: 0.01, alpha: 0.3, beta: 0.8 };
        assert!(matches!(generate(&cfg), Err(Error::InvalidConfig(_))));
    }
}
