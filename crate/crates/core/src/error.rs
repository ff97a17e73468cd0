use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A closed form is undefined at the requested point.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "box projection did not converge for sample {sample:?}: residual {residual:e} after {iterations} iterations"
    )]
    ProjectionNotConverged { sample: Option<usize>, residual: f64, iterations: usize },

    #[error("measurement matrix is rank deficient: {0}")]
    RankDeficient(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
