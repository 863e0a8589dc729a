use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("shape mismatch in {what}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        what: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("state error: {0}")]
    State(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
