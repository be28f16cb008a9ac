//! Power autocorrelations for illiquid returns.
//!
//! Observed returns `r_t = a_t r~_t` carry a zero whenever the latent return
//! is censored. When the zero probability or the unconditional variance
//! drifts over time, classical autocorrelations of `|r_t|^delta` report
//! spurious persistence. This crate provides the classical statistics, the
//! probability-robust (RP) and probability-and-variance-robust (RPV)
//! corrections with kernel-estimated nuisance curves, wild-bootstrap
//! portmanteau tests, descriptive profiles, and a Monte Carlo harness.

pub mod bootstrap;
pub mod chi2;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod powercorr;
pub mod series;
pub mod simulate;
pub mod streams;

pub use bootstrap::{
    bootstrap_autocov, draw_multipliers, run_series_test, run_test, Band, BootstrapConfig, BootstrapOutcome,
    MultiplierDist, ReplicateScaling,
};
pub use chi2::{chi2_critical_value, chi2_test, Chi2Decision};
pub use diagnostics::{absolute_return_profile, probability_profile, Profile, ProfileKind};
pub use error::{Error, Result};
pub use harness::{emit_tables, run_experiment, run_experiment_with_threads, ExperimentResult, ExperimentSpec};
pub use kernel::{
    estimate_power_moment, estimate_probability, kernel_weights, loocv_bandwidth, smooth, CurveEstimate, CurveTarget,
    KernelConfig,
};
pub use powercorr::{
    classical_autocorr, plugin_variance_rp, plugin_variance_rpv, portmanteau_stat, portmanteau_stat_upto, rp_autocorr,
    rp_autocorr_adaptive, rpv_autocorr, rpv_autocorr_adaptive, AsymptoticVariance, AutocorrSet, Method,
};
pub use series::{build_series, power_transform, PowerSeries, PowerSpec, ReturnSeries};
pub use simulate::{generate, true_curves, DgpConfig, ProbabilityPath, SimulatedPanel, Volatility};
