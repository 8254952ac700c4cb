use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    /// An argument outside the mathematical domain of an operation
    /// (inverting zero, a ratio set of a singleton, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("sets live in different fields: F_{0} vs F_{1}")]
    ModulusMismatch(u64, u64),

    /// The request exceeds a documented capability cap (table size,
    /// exhaustive-search size, ...).
    #[error("resource limit: {0}")]
    Resource(String),

    /// An exact consequence of the construction failed to hold. Seeing this
    /// means either a bug or a counterexample; it is never recoverable.
    #[error("audit falsified: {0}")]
    Falsified(String),

    /// Two independent computations of the same quantity disagreed.
    #[error("internal disagreement: {0}")]
    Internal(String),

    #[error("grid cell {index} ({cell}) failed: {source}")]
    Cell {
        index: usize,
        cell: String,
        #[source]
        source: Box<LabError>,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// Process exit code: 1 when an audit was falsified, 2 for usage and
    /// resource problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Falsified(_) | LabError::Internal(_) => 1,
            LabError::Cell { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    pub fn is_fatal_audit(&self) -> bool {
        self.exit_code() == 1
    }
}
