use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{routine} did not converge within {iterations} iterations")]
    NoConvergence { routine: &'static str, iterations: usize },

    /// NNLS ran out of outer iterations; the best iterate is attached.
    #[error("nnls exhausted its budget of {iterations} outer iterations")]
    NnlsBudget { iterations: usize, best: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("matrix is rank deficient (rank {rank}, expected {expected})")]
    RankDeficient { rank: usize, expected: usize },
}
