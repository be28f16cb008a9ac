//! Monte Carlo size and power experiments.
//!
//! For every sample size and replication a panel is simulated, the nuisance
//! curves are re-estimated (LOOCV unless a fixed bandwidth is configured)
//! and each requested method is tested at level `alpha`. The classical test
//! uses the chi-square reference and `+-z/sqrt(n)` bands; RP and RPV use the
//! wild bootstrap. Every replication draws from its own seeded stream, so
//! results are identical for any number of worker threads.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bootstrap::{run_test, BootstrapConfig, MultiplierDist, ReplicateScaling};
use crate::chi2::chi2_critical_value;
use crate::error::{Error, Result};
use crate::kernel::{estimate_power_moment, estimate_probability, KernelConfig};
use crate::powercorr::{
    classical_autocorr, portmanteau_stat_upto, rp_autocorr_adaptive, rpv_autocorr_adaptive, Method,
};
use crate::series::{power_transform, PowerSpec};
use crate::simulate::{generate, DgpConfig};
use crate::streams::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    /// Design template; `n`, `seed` and `moment_delta` are set per replication.
    pub dgp: DgpConfig,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub bootstrap_replicates: usize,
    pub methods: Vec<Method>,
    pub alpha: f64,
    /// Lags entering the portmanteau statistics.
    pub test_lags: usize,
    /// Lags whose band-exceedance frequencies are tabulated.
    pub band_lags: Vec<usize>,
    pub delta: f64,
    pub multiplier: MultiplierDist,
    pub scaling: ReplicateScaling,
    pub seed: u64,
    pub kernel: KernelConfig,
}

impl ExperimentSpec {
    /// Desk-scale defaults: R = 400, B = 499, n in {100, 200, 400, 800}.
    pub fn desk(design: &str) -> Result<Self> {
        Ok(Self {
            dgp: DgpConfig::preset(design, 100, 0)?,
            sample_sizes: vec![100, 200, 400, 800],
            replications: 400,
            bootstrap_replicates: 499,
            methods: Method::ALL.to_vec(),
            alpha: 0.05,
            test_lags: 5,
            band_lags: vec![1, 2, 3, 4, 5, 20, 40, 60],
            delta: 1.0,
            multiplier: MultiplierDist::Mammen,
            scaling: ReplicateScaling::default(),
            seed: 1,
            kernel: KernelConfig::default(),
        })
    }

    /// R = 5000 trajectories and B = 3999 bootstrap replicates.
    pub fn paper_scale(mut self) -> Self {
        self.replications = 5000;
        self.bootstrap_replicates = 3999;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be >= 1".into()));
        }
        if self.test_lags == 0 {
            return Err(Error::InvalidArgument("test_lags must be >= 1".into()));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n <= self.test_lags + 2) {
            return Err(Error::InvalidArgument(format!(
                "sample size {n} must exceed test_lags + 2 = {}",
                self.test_lags + 2
            )));
        }
        if self.band_lags.contains(&0) {
            return Err(Error::InvalidArgument("band lags start at 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidLevel(self.alpha));
        }
        PowerSpec::new(self.delta, self.test_lags)?;
        self.kernel.validate()?;
        if self.methods.iter().any(|m| *m != Method::Classical) {
            self.bootstrap_config(0).validate()?;
        }
        for &n in &self.sample_sizes {
            DgpConfig { n, ..self.dgp.clone() }.validate()?;
        }
        Ok(())
    }

    fn bootstrap_config(&self, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            replicates: self.bootstrap_replicates,
            multiplier: self.multiplier,
            alpha: self.alpha,
            seed,
            scaling: self.scaling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BandCount {
    pub lag: usize,
    /// `None` when the lag cannot be computed at this sample size.
    pub outside: Option<usize>,
}

/// Counts for one (method, n) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub method: Method,
    pub n: usize,
    pub replications: usize,
    pub rejections: usize,
    pub bands: Vec<BandCount>,
}

fn pct(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

impl Cell {
    pub fn rejection_pct(&self) -> f64 {
        pct(self.rejections, self.replications)
    }

    pub fn outside_pct(&self, lag: usize) -> Option<f64> {
        self.bands
            .iter()
            .find(|b| b.lag == lag)
            .and_then(|b| b.outside)
            .map(|c| pct(c, self.replications))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub methods: Vec<Method>,
    pub sample_sizes: Vec<usize>,
    pub band_lags: Vec<usize>,
    pub cells: Vec<Cell>,
    /// Wall-clock seconds per sample size; not part of the tables.
    #[serde(skip)]
    pub seconds: Vec<(usize, f64)>,
}

impl ExperimentResult {
    pub fn cell(&self, method: Method, n: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.n == n)
    }
}

struct MethodOutcome {
    reject: bool,
    outside: Vec<Option<bool>>,
}

fn normal_quantile(q: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(q)
}

fn replicate(spec: &ExperimentSpec, n: usize, r: usize, chi2_crit: f64, z: f64) -> Result<Vec<MethodOutcome>> {
    let rep_seed = derive_seed(spec.seed, &[n as u64, r as u64]);
    let dgp = DgpConfig {
        n,
        seed: rep_seed,
        moment_delta: spec.delta,
        ..spec.dgp.clone()
    };
    let panel = generate(&dgp)?;
    let series = &panel.observed;
    let max_band = spec.band_lags.iter().copied().filter(|&h| h + 2 <= n).max().unwrap_or(0);
    let lags = spec.test_lags.max(max_band);
    let pspec = PowerSpec::new(spec.delta, lags)?;
    let band_flags = |outside: &dyn Fn(usize) -> bool| -> Vec<Option<bool>> {
        spec.band_lags
            .iter()
            .map(|&h| (h <= lags).then(|| outside(h)))
            .collect()
    };

    spec.methods
        .iter()
        .map(|&method| {
            let ac = match method {
                Method::Classical => {
                    let ac = classical_autocorr(&power_transform(series, &pspec), lags)?;
                    let stat = portmanteau_stat_upto(&ac, spec.test_lags);
                    let bound = z / (n as f64).sqrt();
                    return Ok(MethodOutcome {
                        reject: stat > chi2_crit,
                        outside: band_flags(&|h| ac.rho[h - 1].abs() > bound),
                    });
                }
                Method::Rp => rp_autocorr_adaptive(series, &pspec, &estimate_probability(series, &spec.kernel)?)?,
                Method::Rpv => {
                    rpv_autocorr_adaptive(series, &pspec, &estimate_power_moment(series, &pspec, &spec.kernel)?)?
                }
            };
            let boot_seed = derive_seed(rep_seed, &[method as u64 + 1]);
            let outcome = run_test(&ac, spec.test_lags, &spec.bootstrap_config(boot_seed))?;
            Ok(MethodOutcome {
                reject: outcome.reject,
                outside: band_flags(&|h| outcome.bands[h - 1].excludes_observed()),
            })
        })
        .collect()
}

/// Runs the experiment on the current rayon pool.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let chi2_crit = chi2_critical_value(spec.test_lags, spec.alpha)?;
    let z = normal_quantile(1.0 - spec.alpha / 2.0);
    let mut cells = Vec::new();
    let mut seconds = Vec::new();

    for &n in &spec.sample_sizes {
        let started = Instant::now();
        let outcomes: Vec<Result<Vec<MethodOutcome>>> = (0..spec.replications)
            .into_par_iter()
            .map(|r| replicate(spec, n, r, chi2_crit, z))
            .collect();
        let mut per_rep = Vec::with_capacity(outcomes.len());
        for (r, outcome) in outcomes.into_iter().enumerate() {
            per_rep.push(outcome.map_err(|e| Error::Replication {
                n,
                replication: r,
                source: Box::new(e),
            })?);
        }
        for (k, &method) in spec.methods.iter().enumerate() {
            let rejections = per_rep.iter().filter(|rep| rep[k].reject).count();
            let bands = spec
                .band_lags
                .iter()
                .enumerate()
                .map(|(i, &lag)| BandCount {
                    lag,
                    outside: per_rep[0][k].outside[i]
                        .map(|_| per_rep.iter().filter(|rep| rep[k].outside[i] == Some(true)).count()),
                })
                .collect();
            cells.push(Cell {
                method,
                n,
                replications: spec.replications,
                rejections,
                bands,
            });
        }
        seconds.push((n, started.elapsed().as_secs_f64()));
    }

    Ok(ExperimentResult {
        methods: spec.methods.clone(),
        sample_sizes: spec.sample_sizes.clone(),
        band_lags: spec.band_lags.clone(),
        cells,
        seconds,
    })
}

/// Runs the experiment on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(spec))
}

/// Rendered tables: rejection frequencies and band-exceedance frequencies,
/// each as CSV and as aligned text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tables {
    pub rejection_csv: String,
    pub rejection_text: String,
    pub bands_csv: String,
    pub bands_text: String,
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |p| format!("{p:.2}"))
}

pub fn emit_tables(result: &ExperimentResult) -> Tables {
    let mut rejection_csv = String::from("method,n,replications,rejections,rejection_pct\n");
    let mut bands_csv = String::from("method,n,lag,outside_pct\n");
    for c in &result.cells {
        let _ = writeln!(
            rejection_csv,
            "{},{},{},{},{:.2}",
            c.method.name(),
            c.n,
            c.replications,
            c.rejections,
            c.rejection_pct()
        );
        for b in &c.bands {
            let _ = writeln!(bands_csv, "{},{},{},{}", c.method.name(), c.n, b.lag, fmt_pct(c.outside_pct(b.lag)));
        }
    }

    let mut rejection_text = format!("{:<10}", "method");
    for n in &result.sample_sizes {
        let _ = write!(rejection_text, "{:>10}", format!("n={n}"));
    }
    rejection_text.push('\n');
    for &m in &result.methods {
        let _ = write!(rejection_text, "{:<10}", m.label());
        for &n in &result.sample_sizes {
            let v = result.cell(m, n).map(Cell::rejection_pct);
            let _ = write!(rejection_text, "{:>10}", fmt_pct(v));
        }
        rejection_text.push('\n');
    }

    let mut bands_text = format!("{:<10}{:<8}", "method", "n");
    for lag in &result.band_lags {
        let _ = write!(bands_text, "{:>8}", lag);
    }
    bands_text.push('\n');
    for &m in &result.methods {
        for &n in &result.sample_sizes {
            let _ = write!(bands_text, "{:<10}{:<8}", m.label(), n);
            for &lag in &result.band_lags {
                let v = result.cell(m, n).and_then(|c| c.outside_pct(lag));
                let _ = write!(bands_text, "{:>8}", fmt_pct(v));
            }
            bands_text.push('\n');
        }
    }

    Tables {
        rejection_csv,
        rejection_text,
        bands_csv,
        bands_text,
    }
}

/// Writes `rejections.{csv,txt}` and `bands.{csv,txt}` into `dir`.
pub fn write_tables(result: &ExperimentResult, dir: &Path) -> Result<()> {
    let t = emit_tables(result);
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("rejections.csv"), t.rejection_csv)?;
    std::fs::write(dir.join("rejections.txt"), t.rejection_text)?;
    std::fs::write(dir.join("bands.csv"), t.bands_csv)?;
    std::fs::write(dir.join("bands.txt"), t.bands_text)?;
    Ok(())
}
