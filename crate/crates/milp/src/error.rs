use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("constraint `{constraint}` references undeclared variable index {index}")]
    UnknownVariable { constraint: String, index: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("variable `{name}` has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("malformed model: {0}")]
    ModelMalformed(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("enumeration supports at most {max} binaries, model has {count}")]
    TooManyBinaries { count: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, MilpError>;
