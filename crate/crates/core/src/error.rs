use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operators do not commute (max commutator norm {0:.3e})")]
    NonCommuting(f64),

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid observable square: {0}")]
    InvalidSquare(String),

    #[error("strategy for game `{game}` is not perfect (min acceptance {min_acceptance:.12})")]
    NotPerfect { game: String, min_acceptance: f64 },

    #[error(
        "enumeration budget exceeded: {pairs:.3e} deterministic pairs > budget {budget}; \
         use sampling mode for a lower bound"
    )]
    BudgetExceeded { pairs: f64, budget: u64 },

    #[error("Lie closure exceeded the maximum dimension {0}")]
    ClosureOverflow(usize),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
