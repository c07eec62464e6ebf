use thiserror::Error;

/// Errors raised by code construction, detection and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}: input is empty")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("singular matrix (min eigenvalue {0:.3e})")]
    Singular(f64),

    #[error("code is not group decodable (max violation {0:.3e})")]
    NotGroupDecodable(f64),

    #[error("search space of {0} candidates exceeds the limit of {1}")]
    SearchTooLarge(u128, u128),

    #[error("matrix is not orthogonal (max deviation {0:.3e})")]
    NotOrthogonal(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical kind (singular channels, bad matrices),
    /// as opposed to invalid user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian(_)
                | Error::NotPsd(_)
                | Error::Singular(_)
                | Error::NotOrthogonal(_)
                | Error::NotGroupDecodable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
