use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input values or malformed files.
    Data,
    /// A numerical procedure failed to converge or was ill-posed.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {len} levels")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("basis did not converge up to dimension {basis_dim} (last relative change {last_delta:e})")]
    ConvergenceFailure { basis_dim: usize, last_delta: f64 },

    #[error("transition {i}->{j} at {transition_hz:.6e} Hz is within {guard_hz:e} Hz of the resonator at {resonator_hz:.6e} Hz")]
    ResonanceCollision {
        i: usize,
        j: usize,
        transition_hz: f64,
        resonator_hz: f64,
        guard_hz: f64,
    },

    #[error("transition {i}->{j} has zero frequency")]
    ZeroTransition { i: usize, j: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigendecomposition(String),

    #[error("exponential fit failed: {0}")]
    FitFailure(String),

    #[error("dominant decay mode is ambiguous, tied modes {0:?}")]
    DominantModeTie(Vec<usize>),

    #[error("optimizer did not converge within {iterations} iterations")]
    OptimizerNotConverged { iterations: usize },

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("at grid point {index}: {source}")]
    AtGridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("for rate {i}->{j}: {source}")]
    AtPair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::ConvergenceFailure { .. }
            | Error::Eigendecomposition(_)
            | Error::FitFailure(_)
            | Error::DominantModeTie(_)
            | Error::OptimizerNotConverged { .. }
            | Error::Undefined(_) => ErrorKind::Numerical,
            Error::AtGridPoint { source, .. } | Error::AtPair { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn at_grid(index: usize, source: Error) -> Self {
        Error::AtGridPoint {
            index,
            source: Box::new(source),
        }
    }
}
