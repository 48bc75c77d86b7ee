use thiserror::Error;

pub type Result<T> = std::result::Result<T, MagmarError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagmarError {
    #[error("{family} copula: {message}")]
    Domain { family: &'static str, message: String },

    #[error("value {0} is outside the open unit interval")]
    NotInUnitInterval(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("h-function inversion did not converge (residual {residual:e})")]
    RootFinding { residual: f64 },

    #[error("quadrature did not reach tolerance (estimate {estimate}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("non-finite conditional density at index {index}")]
    NonFiniteDensity { index: usize },

    #[error("series too short: {len} observations, need more than {required}")]
    SeriesTooShort { len: usize, required: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid model string at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("data error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Data { line: Option<usize>, message: String },

    #[error("optimizer failed: {message} (best nll {best_nll})")]
    Optimizer { message: String, best_nll: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl MagmarError {
    pub(crate) fn data(line: Option<usize>, message: impl Into<String>) -> Self {
        MagmarError::Data { line, message: message.into() }
    }

    /// True for errors caused by bad numbers rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            MagmarError::RootFinding { .. }
                | MagmarError::Quadrature { .. }
                | MagmarError::NonFiniteDensity { .. }
                | MagmarError::Optimizer { .. }
        )
    }
}

impl From<std::io::Error> for MagmarError {
    fn from(e: std::io::Error) -> Self {
        MagmarError::Io(e.to_string())
    }
}
