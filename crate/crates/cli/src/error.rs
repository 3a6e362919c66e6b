use std::fmt;
use std::io;

use crate::validate::Diagnostic;

/// Failure of a CLI run, carrying its exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] ergodic_core::Error),
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}", DiagnosticList(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

struct DiagnosticList<'a>(&'a [Diagnostic]);

impl fmt::Display for DiagnosticList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config has {} problem(s)", self.0.len())?;
        for d in self.0 {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_CONSISTENCY: u8 = 4;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use ergodic_core::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Invalid(_) | CliError::Usage(_) => EXIT_INVALID,
            CliError::Core(e) => match e {
                E::Budget(_) => EXIT_BUDGET,
                E::Consistency(_) => EXIT_CONSISTENCY,
                E::Numeric(_) => EXIT_FAILURE,
                E::Input(_)
                | E::Domain(_)
                | E::Window(_)
                | E::Range(_)
                | E::Capability(_) => EXIT_INVALID,
            },
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_FAILURE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
