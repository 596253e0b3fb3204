use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("rank deficient input: {0}")]
    Rank(String),

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("state is not normalized (norm {0})")]
    Normalization(f64),

    #[error("no exact-Egorov unitary (parity obstruction) for N={n}: {detail}")]
    ParityObstruction { n: usize, detail: String },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("insufficient grid resolution: aliasing estimate {aliasing:e} exceeds {limit:e}")]
    Resolution { aliasing: f64, limit: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("refusing generic solve: {0}")]
    CostCap(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
