use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("parameter `{name}` out of range: {value}")]
    ParamOutOfRange { name: &'static str, value: f64 },
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("quadrature did not converge: {0}")]
    NonConvergentQuadrature(String),
    #[error("transience not guaranteed: {0}")]
    TransienceNotGuaranteed(String),
    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
    #[error("cutoff too small: jump rate {0} overflows")]
    CutoffTooSmall(f64),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("unbounded Lévy ratio: {0}")]
    UnboundedLevyRatio(String),
    #[error("ordering violated for {theorem}: {detail}")]
    OrderingViolated { theorem: String, detail: String },
    #[error("zero diagonal at j = {0}")]
    ZeroDiagonal(usize),
    #[error("negative weight alpha_{j} = {value}")]
    NegativeWeight { j: usize, value: f64 },
    #[error("no witness found: {0}")]
    NoWitnessFound(String),
    #[error("config error at line {line}, column {column}: {message}")]
    ConfigParse { line: usize, column: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
