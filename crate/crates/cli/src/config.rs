//! TOML experiment configuration.
//!
//! Only `design` is required; every other key falls back to the desk-scale
//! defaults of [`ExperimentSpec::desk`].
//!
//! ```toml
//! design = "a1"                 # a1, a2, c1, c2 or b
//! sample_sizes = [100, 200, 400, 800]
//! replications = 400
//! bootstrap_replicates = 499
//! methods = ["classical", "rp", "rpv"]
//! alpha = 0.05
//! test_lags = 5
//! band_lags = [1, 2, 3, 4, 5, 20, 40, 60]
//! delta = 1.0
//! multiplier = "mammen"         # or "rademacher"
//! scaling = "observed_gamma0"   # or "replicate_gamma0"
//! seed = 1
//! bandwidth = 0.1               # fixed bandwidth; omit for per-replication LOOCV
//! thinning_threshold = 0.063    # override the thinning cut-off
//! median = "sample"             # or "population", GARCH design only
//! paper_scale = false           # R = 5000, B = 3999
//! ```

use std::path::Path;

use illiqcorr::bootstrap::{MultiplierDist, ReplicateScaling};
use illiqcorr::harness::ExperimentSpec;
use illiqcorr::kernel::KernelConfig;
use illiqcorr::powercorr::Method;
use illiqcorr::simulate::MedianKind;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub design: String,
    pub sample_sizes: Option<Vec<usize>>,
    pub replications: Option<usize>,
    pub bootstrap_replicates: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub alpha: Option<f64>,
    pub test_lags: Option<usize>,
    pub band_lags: Option<Vec<usize>>,
    pub delta: Option<f64>,
    pub multiplier: Option<MultiplierDist>,
    pub scaling: Option<ReplicateScaling>,
    pub seed: Option<u64>,
    pub bandwidth: Option<f64>,
    pub thinning_threshold: Option<f64>,
    pub median: Option<MedianKind>,
    #[serde(default)]
    pub paper_scale: bool,
}

impl ExperimentFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("experiment config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn into_spec(self) -> CliResult<ExperimentSpec> {
        let mut spec = ExperimentSpec::desk(&self.design)?;
        if self.paper_scale {
            spec = spec.paper_scale();
        }
        if let Some(v) = self.sample_sizes {
            spec.sample_sizes = v;
        }
        if let Some(v) = self.replications {
            spec.replications = v;
        }
        if let Some(v) = self.bootstrap_replicates {
            spec.bootstrap_replicates = v;
        }
        if let Some(v) = self.methods {
            spec.methods = v;
        }
        if let Some(v) = self.alpha {
            spec.alpha = v;
        }
        if let Some(v) = self.test_lags {
            spec.test_lags = v;
        }
        if let Some(v) = self.band_lags {
            spec.band_lags = v;
        }
        if let Some(v) = self.delta {
            spec.delta = v;
        }
        if let Some(v) = self.multiplier {
            spec.multiplier = v;
        }
        if let Some(v) = self.scaling {
            spec.scaling = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(b) = self.bandwidth {
            spec.kernel = KernelConfig::with_bandwidth(b);
        }
        if let Some(c) = self.thinning_threshold {
            spec.dgp.thinning_threshold = c;
        }
        if let Some(m) = self.median {
            spec.dgp.median = m;
        }
        spec.validate()?;
        Ok(spec)
    }
}
