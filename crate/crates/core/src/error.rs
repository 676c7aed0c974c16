use thiserror::Error;

/// Errors raised by the estimation pipeline.
///
/// Variants split into two groups: problems with what the caller asked for
/// ([`Error::is_input`]) and numerical breakdowns of otherwise valid requests.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("unsupported parity: k = {k} is even; only odd k is supported")]
    UnsupportedParity { k: usize },

    #[error("refused: {0}")]
    Guard(String),

    #[error("infeasible moments: {0}")]
    InfeasibleMoments(String),

    #[error("degenerate moments: {0}")]
    DegenerateMoments(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for errors caused by the request rather than by the numerics.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Input(_)
                | Error::UnsupportedParity { .. }
                | Error::Guard(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
