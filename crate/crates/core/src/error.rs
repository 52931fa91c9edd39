use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite integrand value at point {point:?}")]
    NumericalEvaluation { point: Vec<f64> },

    #[error("covariance is not positive semi-definite:\n{matrix}")]
    NonPsdCovariance { matrix: DMatrix<f64> },

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("bearing is undefined at the sensor origin")]
    UndefinedBearing,

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("filter {filter} failed on {failed} of {runs} Monte Carlo runs")]
    TooManyFailures {
        filter: String,
        failed: usize,
        runs: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for the command-line tool: 2 for invalid
    /// configuration, 3 for numerical failure, 1 for I/O problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Json(_) => 2,
            Error::NumericalEvaluation { .. }
            | Error::NonPsdCovariance { .. }
            | Error::SingularInnovation
            | Error::UndefinedBearing
            | Error::NoConvergence
            | Error::TooManyFailures { .. } => 3,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
