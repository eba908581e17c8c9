use std::path::PathBuf;

/// Errors raised by the surge toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("no root of the balance residual on [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("{count} balance crossings found on the bracket: {roots:?}")]
    AmbiguousRoot { count: usize, roots: Vec<f64> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("trajectory blew up at t = {t:.6} s (|u_S| = {speed:.4e} m/s exceeds guard {guard:.4e})")]
    BlowUp { t: f64, speed: f64, guard: f64 },

    #[error("classification is constant ({label}) over Fn range [{lo}, {hi}]")]
    NoTransition { lo: f64, hi: f64, label: String },

    #[error("non-finite Wiener increment at step {step}")]
    NonFiniteIncrement { step: u64 },

    #[error("stationary density not normalizable: {0}")]
    NotNormalizable(String),

    #[error("insufficient samples: got {got}, need at least {need}")]
    InsufficientSamples { got: usize, need: usize },

    #[error("no samples left after discarding the first {cut} s")]
    EmptyAfterCut { cut: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's input files rather than by a run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse { .. } | Error::InvalidParameter(_)
        ) || matches!(self, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}
