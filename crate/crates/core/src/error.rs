use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by problem validation, special functions, the convolution
/// engine, the solvers and the model zoo.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported order: {0}")]
    UnsupportedOrder(String),
    #[error("bad time span: t0 = {t0}, T = {t_end}")]
    BadSpan { t0: f64, t_end: f64 },
    #[error("initial values must have {expected} row(s), got {got}")]
    BadInitialShape { expected: usize, got: usize },
    #[error("bad solver configuration: {0}")]
    BadConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("series did not converge: {0}")]
    Convergence(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("plan error: transform length {len} exceeds maximum {max}")]
    Plan { len: usize, max: usize },
    #[error("solver diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },
    #[error("singular matrix (pivot {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("the Newton-Raphson method needs a Jacobian")]
    MissingJacobian,
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("model `{0}` has no exact solution")]
    NoExactSolution(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerical integration itself, as opposed to
    /// malformed input.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::SingularMatrix { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
