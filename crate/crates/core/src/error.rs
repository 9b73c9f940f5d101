use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has zero dimension")]
    EmptyMatrix,
    #[error("{what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("triangular matrix has zero diagonal entry at {index}")]
    SingularTriangular { index: usize },
    #[error("regularizer must be positive, got {0:e}")]
    InvalidRegularizer(f64),
    #[error("unknown generator kind {0:?}")]
    UnknownGeneratorKind(String),
    #[error("invalid generator spec: {0}")]
    InvalidGeneratorSpec(String),
    #[error("degenerate mask: {foreground} foreground and {background} background elements")]
    DegenerateMask { foreground: usize, background: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("background Jacobian is identically zero; the Rayleigh quotient is unbounded")]
    ZeroBackgroundJacobian,
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),
    #[error("zero vector has no Rayleigh quotient")]
    ZeroVector,
    #[error("not a Jacobian file (magic {0:?})")]
    NotAJacobianFile([u8; 4]),
    #[error("not a mask file (magic {0:?})")]
    NotAMaskFile([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("file truncated: need {expected} bytes, have {actual}")]
    TruncatedFile { expected: u64, actual: u64 },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(u64),
    #[error("invalid payload: non-finite value at element {0}")]
    InvalidPayload(u64),
    #[error("invalid mask byte {value} at element {index}")]
    InvalidMaskValue { index: u64, value: u8 },
    #[error("invalid directions file: {0}")]
    InvalidDirections(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
