use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected 2n = {expected} horizontal coordinates, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinates must be finite")]
    NonFinite,

    #[error("horizontal dimension must be even and positive, got {0}")]
    OddDimension(usize),

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lambda = {lambda} must lie in (0, {q})")]
    LambdaOutOfRange { lambda: f64, q: f64 },

    #[error("1/r = {inv_r} is not positive")]
    NonPositiveInverseR { inv_r: f64 },

    #[error("weight |x|^(-gamma) is singular at the origin")]
    SingularPoint,

    #[error("configuration is not admissible: {0}")]
    Inadmissible(String),

    #[error("family `{family}` does not match the violated conditions [{violated}]")]
    FamilyMismatch { family: String, violated: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
