use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid functionality z = {0}: dendrimers need z >= 3")]
    InvalidFunctionality(usize),

    #[error("resource limit: {nodes} nodes exceeds the cap of {cap}")]
    ResourceLimit { nodes: u128, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("node index {index} out of range for {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("eigenvectors required but the spectrum was computed without them")]
    MissingEigenvectors,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
}

impl Error {
    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    /// True for errors raised by a numerical routine (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalFailure(_))
    }
}
