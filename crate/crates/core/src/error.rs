use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The graph over sensors and anchors has more than one component.
    /// The components are returned so the caller can split the instance.
    #[error("network is disconnected ({} components)", components.len())]
    Disconnected { components: Vec<Vec<crate::network::Node>> },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    Factorization { row: usize, pivot: f64 },

    #[error("sensor {sensor} cannot reach any cluster head")]
    Unreachable { sensor: usize },

    #[error("ground truth positions are required")]
    MissingTruth,

    #[error("Fisher information matrix is singular")]
    SingularFim,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
