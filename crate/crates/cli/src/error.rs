use std::path::PathBuf;

use crestfield_core::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const SCHEMA: i32 = 2;
    pub const DEGENERATE: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
    pub const STALLED: i32 = 5;
    pub const INCONSISTENT: i32 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("{path}:{line}: {msg}")]
    Csv {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{0}")]
    Inconsistent(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Csv { .. } => exit::SCHEMA,
            CliError::Io { .. } => exit::IO,
            CliError::Inconsistent(_) => exit::INCONSISTENT,
            CliError::Core(e) => match e {
                Error::DegenerateEnergy { .. } => exit::DEGENERATE,
                Error::Infeasible(_) | Error::NoBracket { .. } | Error::NotMonotone { .. } => {
                    exit::INFEASIBLE
                }
                Error::StalledProgress(_) => exit::STALLED,
                _ => exit::SCHEMA,
            },
        }
    }
}
