use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("eigensolver did not converge within {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("unknown corpus instance {name:?} (available: {available})")]
    UnknownInstance { name: String, available: String },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("not a KKT point within tol {tol:e}: {detail}")]
    NotKkt { tol: f64, detail: String },

    #[error("diagnostic inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}
