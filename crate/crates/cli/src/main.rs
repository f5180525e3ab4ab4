use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ricci_tube_cli::{
    cmd_check, cmd_constants, cmd_solve_global, cmd_solve_local, cmd_verify, Outcome, Overrides,
    Result, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "ricci-tube",
    version,
    about = "Prescribed Ricci curvature on cohomogeneity-one tubes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Structure constants from the configured structure.
    Constants,
    /// Certificate constants and hypothesis verdicts.
    Check,
    /// Fixed-point solve on the whole tube, then verification.
    SolveGlobal,
    /// Local shoot around one orbit, then verification.
    SolveLocal,
    /// Verify a solution CSV against the configured data.
    Verify {
        /// Solution file; defaults to `solution` in the configuration.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Flags {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of grid nodes.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Seed of the Lipschitz sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fixed-point tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Fixed-point iteration cap.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
}

fn run(cli: Cli) -> Result<Outcome> {
    let f = cli.flags;
    let path = f
        .config
        .ok_or_else(|| ricci_tube_cli::CliError::Invalid("--config is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    cfg.apply(&Overrides {
        out: f.out,
        grid: f.grid,
        seed: f.seed,
        tol: f.tol,
        max_iter: f.max_iter,
    });
    match cli.command {
        Command::Constants => cmd_constants(&cfg),
        Command::Check => cmd_check(&cfg),
        Command::SolveGlobal => cmd_solve_global(&cfg),
        Command::SolveLocal => cmd_solve_local(&cfg),
        Command::Verify { solution } => cmd_verify(&cfg, solution.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(out) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&out.report).expect("report serializes")
            );
            log::info!("exit code {}", out.code);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
