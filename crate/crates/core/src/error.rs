use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate linear operator: ||A|| = 0")]
    DegenerateOperator,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("oracle failure at iteration {k}: {source}")]
    Oracle { k: usize, source: Box<Error> },

    #[error("{what} did not converge after {iterations} iterations (best value {best})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        best: f64,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("cannot split {samples} samples into {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },

    #[error("grid cell (t = {t}, lambda1 = {lambda1}) failed: {source}")]
    CvCell {
        t: f64,
        lambda1: f64,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
