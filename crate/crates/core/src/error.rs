use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("qubit index {index} out of range for a {n}-qubit register")]
    QubitIndex { index: usize, n: usize },

    #[error("invalid qubit subset: {0}")]
    InvalidSubset(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("parameter `{name}` out of range: {detail}")]
    Parameter { name: &'static str, detail: String },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        detail: detail.into(),
    }
}
