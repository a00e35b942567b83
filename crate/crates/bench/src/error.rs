use std::io;

use thiserror::Error;

/// Harness failures, grouped by the exit status they map to.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 1,
            BenchError::Data(_) => 2,
            BenchError::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: io::Error) -> Self {
        BenchError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<dpbandit::Error> for BenchError {
    fn from(err: dpbandit::Error) -> Self {
        use dpbandit::Error as E;
        match err {
            E::Config(_) | E::Input(_) | E::Range { .. } => BenchError::Usage(err.to_string()),
            E::Data(_) => BenchError::Data(err.to_string()),
            E::Numerical(_) => BenchError::Numerical(err.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
