//! Configuration ingestion, subcommand dispatch and machine-readable output
//! for the `ricci-tube` binary.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | an output file could not be written |
//! | 2 | invalid input (configuration, structure, data, solution file) |
//! | 3 | a certificate verdict failed or is conditional, or the local inequality fails |
//! | 4 | the fixed-point iteration did not converge |
//! | 5 | residual targets missed |
//! | 6 | the local shoot broke down before the requested span |

pub mod commands;
pub mod config;
mod error;
pub mod io;

pub use commands::{
    cmd_check, cmd_constants, cmd_solve_global, cmd_solve_local, cmd_verify, Outcome,
};
pub use config::{Overrides, RunConfig};
pub use error::{exit, CliError, Result};
