use thiserror::Error;

/// Errors raised by mesh construction, assembly, solvers and drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("observation data error: {0}")]
    Data(String),

    #[error("matrix is not positive definite: pivot {value:e} at row {row}")]
    NotPositiveDefinite { row: usize, value: f64 },

    #[error("singular saddle-point factorization at row {row} (pivot {value:e}); the discrete inf-sup condition likely fails")]
    SingularSaddle { row: usize, value: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
