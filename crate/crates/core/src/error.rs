use thiserror::Error;

/// Errors raised by the estimation, testing and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("return series is empty")]
    EmptySeries,
    #[error("every observation is zero (no |r_t| above the zero threshold)")]
    AllZero,
    #[error("non-finite value at position {index}")]
    NonFiniteValue { index: usize },
    #[error("invalid zero threshold {0}; must be finite and nonnegative")]
    InvalidThreshold(f64),
    #[error("invalid power specification: {0}")]
    InvalidSpec(String),
    #[error("invalid kernel configuration: {0}")]
    InvalidKernelConfig(String),
    #[error("kernel weights vanish at bandwidth {bandwidth}")]
    DegenerateBandwidth { bandwidth: f64 },
    #[error("every candidate bandwidth is degenerate")]
    AllBandwidthsDegenerate,
    #[error("lag-0 autocovariance is zero")]
    ZeroVariance,
    #[error("curve has length {got}, expected {expected}")]
    CurveLengthMismatch { expected: usize, got: usize },
    #[error("nuisance curve has a nonpositive mean or negative entries")]
    NonPositiveCurveMean,
    #[error("need at least {needed} nonzero observations, found {found}")]
    TooFewNonzero { needed: usize, found: usize },
    #[error("invalid significance level {0}; must lie in (0, 1)")]
    InvalidLevel(f64),
    #[error("sequence lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid simulation design: {0}")]
    InvalidConfig(String),
    #[error("no closed-form power-moment curve exists for the GARCH design")]
    UnsupportedForGarch,
    #[error("experiment cell (n = {n}, replication {replication}) failed: {source}")]
    Replication {
        n: usize,
        replication: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
