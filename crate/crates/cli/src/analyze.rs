//! Full single-series analysis: profiles, nuisance curves, the three
//! autocorrelograms with their bands and portmanteau tests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use illiqcorr::bootstrap::{run_test, Band, BootstrapConfig, MultiplierDist, ReplicateScaling};
use illiqcorr::chi2::chi2_test;
use illiqcorr::diagnostics::{absolute_return_profile, probability_profile, Profile};
use illiqcorr::kernel::{estimate_power_moment, estimate_probability, CurveEstimate, KernelConfig};
use illiqcorr::powercorr::{classical_autocorr, rp_autocorr_adaptive, rpv_autocorr_adaptive, AutocorrSet, Method};
use illiqcorr::streams::derive_seed;
use illiqcorr::{build_series, power_transform, PowerSpec, ReturnSeries};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{CliError, CliResult};
use crate::input::{InputData, InputKind};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub delta: f64,
    pub max_lag: usize,
    /// Lags entering the portmanteau statistics; at most `max_lag`.
    pub test_lags: usize,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub multiplier: MultiplierDist,
    pub scaling: ReplicateScaling,
    pub alpha: f64,
    pub seed: u64,
    pub zero_threshold: f64,
    pub kernel: KernelConfig,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            delta: 1.0,
            max_lag: 5,
            test_lags: 5,
            methods: Method::ALL.to_vec(),
            replicates: 999,
            multiplier: MultiplierDist::Mammen,
            scaling: ReplicateScaling::default(),
            alpha: 0.05,
            seed: 1,
            zero_threshold: 0.0,
            kernel: KernelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputMeta {
    pub file: String,
    pub kind: InputKind,
    pub column: String,
    pub n: usize,
    pub nonzero: usize,
    pub zero_fraction: f64,
    pub first_date: Option<String>,
    pub last_date: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub delta: f64,
    pub max_lag: usize,
    pub test_lags: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub multiplier: MultiplierDist,
    pub scaling: ReplicateScaling,
    pub seed: u64,
    pub zero_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub bandwidth: f64,
    pub cv_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestReport {
    Chi2 {
        statistic: f64,
        dof: usize,
        critical_value: f64,
        p_value: f64,
        reject: bool,
    },
    Bootstrap {
        statistic: f64,
        p_value: f64,
        reject: bool,
        replicates: usize,
        seed: u64,
    },
}

impl TestReport {
    pub fn p_value(&self) -> f64 {
        match self {
            TestReport::Chi2 { p_value, .. } | TestReport::Bootstrap { p_value, .. } => *p_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: Method,
    pub autocorrelations: AutocorrSet,
    pub bands: Vec<Band>,
    pub test: TestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub probability_max_deviation: f64,
    pub absolute_return_max_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub input: InputMeta,
    pub settings: Settings,
    pub probability_curve: CurveSummary,
    pub moment_curve: Option<CurveSummary>,
    pub methods: Vec<MethodReport>,
    pub profiles: ProfileSummary,
}

impl AnalysisReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Report plus the plottable series written next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub report: AnalysisReport,
    pub series: ReturnSeries,
    pub dates: Option<Vec<String>>,
    pub probability_curve: CurveEstimate,
    pub moment_curve: Option<CurveEstimate>,
    pub profiles: Vec<Profile>,
}

fn summary(c: &CurveEstimate) -> CurveSummary {
    CurveSummary { bandwidth: c.bandwidth, cv_score: c.cv_score }
}

/// Profiles available for the series; the absolute-return profile needs two
/// nonzero returns.
pub fn profiles_for(series: &ReturnSeries) -> CliResult<Vec<Profile>> {
    let mut out = vec![probability_profile(series)?];
    if let Ok(p) = absolute_return_profile(series) {
        out.push(p);
    }
    Ok(out)
}

pub fn analyze(input: &InputData, opts: &AnalyzeOptions) -> CliResult<Analysis> {
    let spec = PowerSpec::new(opts.delta, opts.max_lag)?;
    if opts.test_lags == 0 || opts.test_lags > opts.max_lag {
        return Err(CliError::usage(format!("test lags {} outside 1..={}", opts.test_lags, opts.max_lag)));
    }
    if opts.methods.is_empty() {
        return Err(CliError::usage("at least one method is required"));
    }
    BootstrapConfig {
        replicates: opts.replicates,
        multiplier: opts.multiplier,
        alpha: opts.alpha,
        seed: opts.seed,
        scaling: opts.scaling,
    }
    .validate()?;
    let n = input.returns.len();
    if n <= opts.max_lag + 2 {
        return Err(CliError::data(format!(
            "insufficient data: {n} returns, need more than max_lag + 2 = {}",
            opts.max_lag + 2
        )));
    }
    let series = build_series(&input.returns, opts.zero_threshold)?;
    let profiles = profiles_for(&series)?;
    let probability_curve = estimate_probability(&series, &opts.kernel)?;
    let moment_curve = if opts.methods.contains(&Method::Rpv) {
        Some(estimate_power_moment(&series, &spec, &opts.kernel)?)
    } else {
        None
    };

    let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(1.0 - opts.alpha / 2.0);
    let mut methods = Vec::new();
    for &method in &opts.methods {
        let ac = match method {
            Method::Classical => {
                let ac = classical_autocorr(&power_transform(&series, &spec), opts.max_lag)?;
                let stat = illiqcorr::portmanteau_stat_upto(&ac, opts.test_lags);
                let d = chi2_test(stat, opts.test_lags, opts.alpha)?;
                let half = z / (n as f64).sqrt();
                let bands = ac
                    .rho
                    .iter()
                    .enumerate()
                    .map(|(i, &rho)| Band { lag: i + 1, rho, lower: -half, upper: half })
                    .collect();
                methods.push(MethodReport {
                    method,
                    autocorrelations: ac,
                    bands,
                    test: TestReport::Chi2 {
                        statistic: d.statistic,
                        dof: d.dof,
                        critical_value: d.critical_value,
                        p_value: d.p_value,
                        reject: d.reject,
                    },
                });
                continue;
            }
            Method::Rp => rp_autocorr_adaptive(&series, &spec, &probability_curve)?,
            Method::Rpv => rpv_autocorr_adaptive(&series, &spec, moment_curve.as_ref().expect("estimated above"))?,
        };
        let config = BootstrapConfig {
            replicates: opts.replicates,
            multiplier: opts.multiplier,
            alpha: opts.alpha,
            seed: derive_seed(opts.seed, &[method as u64]),
            scaling: opts.scaling,
        };
        let out = run_test(&ac, opts.test_lags, &config)?;
        methods.push(MethodReport {
            method,
            autocorrelations: ac,
            bands: out.bands,
            test: TestReport::Bootstrap {
                statistic: out.observed_stat,
                p_value: out.p_value,
                reject: out.reject,
                replicates: out.replicates,
                seed: out.seed,
            },
        });
    }

    let report = AnalysisReport {
        input: InputMeta {
            file: input.path.display().to_string(),
            kind: input.kind,
            column: input.column.clone(),
            n,
            nonzero: series.nonzero_count(),
            zero_fraction: series.zero_fraction(),
            first_date: input.dates.as_ref().and_then(|d| d.first().cloned()),
            last_date: input.dates.as_ref().and_then(|d| d.last().cloned()),
        },
        settings: Settings {
            delta: opts.delta,
            max_lag: opts.max_lag,
            test_lags: opts.test_lags,
            alpha: opts.alpha,
            replicates: opts.replicates,
            multiplier: opts.multiplier,
            scaling: opts.scaling,
            seed: opts.seed,
            zero_threshold: opts.zero_threshold,
        },
        probability_curve: summary(&probability_curve),
        moment_curve: moment_curve.as_ref().map(summary),
        profiles: ProfileSummary {
            probability_max_deviation: profiles[0].max_deviation_from_identity(),
            absolute_return_max_deviation: profiles.get(1).map(Profile::max_deviation_from_identity),
        },
        methods,
    };
    Ok(Analysis { report, series, dates: input.dates.clone(), probability_curve, moment_curve, profiles })
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn write_curve_csv<W: Write>(curve: &CurveEstimate, dates: Option<&[String]>, out: W) -> CliResult<()> {
    let Some(dates) = dates else {
        curve.write_csv(out)?;
        return Ok(());
    };
    let mut out = out;
    writeln!(out, "# bandwidth={} cv_score={}", curve.bandwidth, curve.cv_score)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "date", "u", "fitted"])?;
    let n = curve.values.len();
    for (i, v) in curve.values.iter().enumerate() {
        let t = i + 1;
        w.write_record([t.to_string(), dates[i].clone(), (t as f64 / n as f64).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV rows `s, value, kind` and, when dates exist, the date of the
/// observation closing each step.
pub fn write_profiles_csv<W: Write>(
    profiles: &[Profile],
    series: &ReturnSeries,
    dates: Option<&[String]>,
    out: W,
) -> CliResult<()> {
    let Some(dates) = dates else {
        illiqcorr::diagnostics::write_profiles_csv(profiles, out)?;
        return Ok(());
    };
    let nonzero_dates: Vec<&String> =
        dates.iter().zip(series.indicators()).filter(|(_, &a)| a == 1).map(|(d, _)| d).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "value", "kind", "date"])?;
    for p in profiles {
        for (k, (s, v)) in p.points.iter().enumerate() {
            let date = match p.kind {
                illiqcorr::ProfileKind::Probability => &dates[k],
                illiqcorr::ProfileKind::AbsoluteReturn => nonzero_dates[k],
            };
            w.write_record([s.to_string(), v.to_string(), p.kind.name().to_string(), date.clone()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV rows `method, lag, rho, lower, upper` for every method.
pub fn write_autocorrelogram_csv<W: Write>(report: &AnalysisReport, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "lag", "rho", "lower", "upper"])?;
    for m in &report.methods {
        for b in &m.bands {
            w.write_record([
                m.method.name().to_string(),
                b.lag.to_string(),
                b.rho.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn report_json(report: &AnalysisReport) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

/// Writes `report.json`, `autocorrelogram.csv`, `probability_curve.csv`,
/// `moment_curve.csv` (RPV only) and `profiles.csv`.
pub fn write_analysis(analysis: &Analysis, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    let dates = analysis.dates.as_deref();
    create(dir, "report.json")?.write_all(report_json(&analysis.report)?.as_bytes())?;
    write_autocorrelogram_csv(&analysis.report, create(dir, "autocorrelogram.csv")?)?;
    write_curve_csv(&analysis.probability_curve, dates, create(dir, "probability_curve.csv")?)?;
    if let Some(c) = &analysis.moment_curve {
        write_curve_csv(c, dates, create(dir, "moment_curve.csv")?)?;
    }
    write_profiles_csv(&analysis.profiles, &analysis.series, dates, create(dir, "profiles.csv")?)?;
    Ok(())
}
