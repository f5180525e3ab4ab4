use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes; a total function of the command outcome.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVALID_INPUT: i32 = 2;
    /// A certificate verdict or the local inequality failed, or the verdict is conditional.
    pub const HYPOTHESIS: i32 = 3;
    pub const NO_CONVERGENCE: i32 = 4;
    pub const RESIDUAL_MISS: i32 = 5;
    pub const BREAKDOWN: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid configuration {path}: {source}")]
    Config {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("malformed solution file {path}: {message}")]
    Solution { path: PathBuf, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] ricci_tube::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ricci_tube::Error as E;
        match self {
            CliError::Write { .. } => 1,
            CliError::Read { .. }
            | CliError::Config { .. }
            | CliError::Solution { .. }
            | CliError::Invalid(_) => exit::INVALID_INPUT,
            CliError::Core(e) => match e {
                E::InvalidStructure(_)
                | E::NotIsotypic { .. }
                | E::InvalidProblem(_)
                | E::DomainError(_) => exit::INVALID_INPUT,
                E::DegenerateCertificate(_)
                | E::EmptyBox(_)
                | E::BoundViolation(_)
                | E::LocalHypothesisFailed { .. }
                | E::RecipeFailed { .. } => exit::HYPOTHESIS,
                E::NoConvergence { .. } | E::NonPositive(_) | E::HUndefined { .. } => {
                    exit::NO_CONVERGENCE
                }
                E::Breakdown { .. } => exit::BREAKDOWN,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
