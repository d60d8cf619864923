use thiserror::Error;

/// Errors raised across the simulator.
///
/// Each variant belongs to one of three families that the command-line front
/// end maps onto exit codes: configuration problems, physics or parse
/// failures, and fit failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mirror coefficients: r1*r2 = {product} (must satisfy 0 <= r1*r2 < 1)")]
    InvalidMirror { product: f64 },

    #[error("detuning {detuning_hz:.3e} Hz outside the single-resonance model (|detuning| must stay below {limit_hz:.3e} Hz)")]
    OutOfModel { detuning_hz: f64, limit_hz: f64 },

    #[error("resonant Raman drive: optical detuning must be nonzero for adiabatic elimination")]
    ResonantDrive,

    #[error("integration step {step_ns:.3e} ns too coarse; must be at most {limit_ns:.3e} ns")]
    IntegrationStep { step_ns: f64, limit_ns: f64 },

    #[error("integrator failed: {0}")]
    Integrator(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    #[error("noise integral diverges: {0}")]
    CutoffRequired(String),

    #[error("sampling step {dt_ns} ns aliases spectrum with high cutoff {high_cutoff_hz:.3e} Hz")]
    Aliasing { dt_ns: f64, high_cutoff_hz: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("fit `{model}` failed: {reason}")]
    Fit { model: String, reason: String },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("sweep point {point}: {source}")]
    AtSweepPoint {
        point: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parameter(name: &str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn fit(model: &str, reason: impl Into<String>) -> Self {
        Error::Fit {
            model: model.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.to_string(),
            reason: reason.into(),
        }
    }

    /// Innermost error, skipping sweep-point context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSweepPoint { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_fit(&self) -> bool {
        matches!(self.root(), Error::Fit { .. })
    }

    pub fn is_config(&self) -> bool {
        matches!(self.root(), Error::Config { .. } | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
