use thiserror::Error;

/// Crate-wide error type.
///
/// `Infeasible` and `NonConvergence` are recoverable signals for the outer
/// control loops (the ventilation reset reacts to them); the remaining
/// variants indicate bad inputs or configuration and abort the run.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameter or configuration value outside its valid range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Malformed input data (file contents, series lengths, shapes).
    #[error("invalid input: {0}")]
    Input(String),

    /// Discretization would be unstable (explicit-Euler guard violated or
    /// a self-coefficient left (0,1)).
    #[error("unstable discretization: {0}")]
    Stability(String),

    /// A constraint system admits no solution.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An iterative solver exhausted its iteration budget.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// Request refused before starting (e.g. enumeration bound exceeded).
    #[error("refused: {0}")]
    Refused(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
