use thiserror::Error;

use crate::solver::MetricSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    /// The module assignment does not produce well-defined constants.
    #[error(
        "module assignment is not isotypic: constant spread {spread:.3e} exceeds {tolerance:.1e}"
    )]
    NotIsotypic { spread: f64, tolerance: f64 },

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("domain error: {0}")]
    DomainError(String),

    /// `H = sqrt(H1 / H2)` is not defined at the requested point.
    #[error("H undefined: H1 = {h1:.6e}, H2 = {h2:.6e}")]
    HUndefined { h1: f64, h2: f64 },

    #[error("degenerate certificate: {0}")]
    DegenerateCertificate(String),

    #[error("empty sampling box: {0}")]
    EmptyBox(String),

    #[error("non-positive metric coefficient: {0}")]
    NonPositive(String),

    #[error("bound violation: {0}")]
    BoundViolation(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last step {last_delta:.3e})")]
    NoConvergence { iterations: usize, last_delta: f64 },

    /// The local solvability inequality fails; `lhs` is its left-hand side.
    #[error("local hypothesis failed: left-hand side {lhs:.6e} is not negative")]
    LocalHypothesisFailed { lhs: f64 },

    /// Shooting lost positivity before the requested span; the partial solution is kept.
    #[error("shooting broke down at kappa = {kappa:.6e}")]
    Breakdown {
        kappa: f64,
        partial: Box<MetricSolution>,
    },

    #[error("local recipe failed: no beta up to the cap satisfies the local inequality (lhs trace {trace:?})")]
    RecipeFailed { trace: Vec<(f64, f64)> },
}
