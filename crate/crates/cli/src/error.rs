use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numerical => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Data, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn classify(err: &illiqcorr::Error) -> ErrorClass {
    use illiqcorr::Error as E;
    match err {
        E::EmptySeries
        | E::AllZero
        | E::NonFiniteValue { .. }
        | E::TooFewNonzero { .. }
        | E::LengthMismatch { .. }
        | E::CurveLengthMismatch { .. }
        | E::Io(_) => ErrorClass::Data,
        E::ZeroVariance | E::DegenerateBandwidth { .. } | E::AllBandwidthsDegenerate | E::NonPositiveCurveMean => {
            ErrorClass::Numerical
        }
        E::Replication { source, .. } => classify(source),
        _ => ErrorClass::Usage,
    }
}

impl From<illiqcorr::Error> for CliError {
    fn from(err: illiqcorr::Error) -> Self {
        Self { class: classify(&err), message: err.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::data(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        Self::data(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        Self::data(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
