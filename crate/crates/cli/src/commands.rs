//! The subcommands. Each returns an [`Outcome`] whose report is printed and,
//! when an output directory is set, written next to any solution file.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use ricci_tube::certificates::{check_global_with, check_local};
use ricci_tube::solver::{
    fixed_point_solve, local_shoot, theorem_recipe, verify, Grid, MetricSolution, RecipeOptions,
    ResidualReport,
};
use ricci_tube::Error;

use crate::config::{LocalRequest, RunConfig};
use crate::error::{exit, CliError, Result};
use crate::io::{read_solution, solution_csv, write_atomic};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub report: Value,
}

impl Outcome {
    fn new(code: i32, report: Value) -> Self {
        Outcome { code, report }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    // every report type serializes to a JSON object
    serde_json::to_value(v).expect("report serializes")
}

fn residuals(rep: &ResidualReport, target: f64) -> Value {
    json!({ "target": target, "met": rep.meets(target), "report": to_value(rep) })
}

/// Writes the report and, if given, the solution into `dir`.
fn emit(cfg: &RunConfig, dir: &Path, sol: Option<&MetricSolution>, report: &Value) -> Result<()> {
    if let Some(sol) = sol {
        write_atomic(&dir.join(&cfg.output.solution), &solution_csv(sol))?;
    }
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    write_atomic(&dir.join(&cfg.output.report), text.as_bytes())
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

/// Structure constants and their consistency diagnostic.
pub fn cmd_constants(cfg: &RunConfig) -> Result<Outcome> {
    let (s, spread) = cfg.structure()?;
    let mut report = to_value(&s);
    report["spread"] = json!(spread);
    report["manifold_dim"] = json!(s.manifold_dim());
    if let Some(dir) = &cfg.output.dir {
        emit(cfg, dir, None, &report)?;
    }
    Ok(Outcome::new(exit::OK, report))
}

/// Full certificate; exit 3 when any verdict fails or is conditional.
pub fn cmd_check(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.problem()?;
    let env = cfg.envelope(&p)?;
    let cert = check_global_with(&p, &env, &cfg.certificate_options())?;
    let passed = cert.passed();
    let mut report = to_value(&cert);
    report["passed"] = json!(passed);
    report["conditional"] = json!(cert.conditional());
    if let Some(dir) = &cfg.output.dir {
        emit(cfg, dir, None, &report)?;
    }
    Ok(Outcome::new(
        if passed { exit::OK } else { exit::HYPOTHESIS },
        report,
    ))
}

/// Certificate, fixed-point solve and independent verification.
pub fn cmd_solve_global(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.problem()?;
    let env = cfg.envelope(&p)?;
    let cert = check_global_with(&p, &env, &cfg.certificate_options())?;
    let g = Grid::new(cfg.grid, p.sigma)?;
    let sol = fixed_point_solve(&p, &cert, &g, &cfg.solver)?;
    let rep = verify(&sol, &p)?;
    let met = rep.meets(cfg.residual_target);
    let report = json!({
        "certified": cert.passed(),
        "certificate": to_value(&cert),
        "provenance": to_value(&sol.provenance),
        "residuals": residuals(&rep, cfg.residual_target),
    });
    emit(cfg, &out_dir(cfg), Some(&sol), &report)?;
    Ok(Outcome::new(
        if met { exit::OK } else { exit::RESIDUAL_MISS },
        report,
    ))
}

/// Local shoot at `στ` with explicit `δ` or the doubling recipe, verified on
/// the interval reached.
pub fn cmd_solve_local(cfg: &RunConfig) -> Result<Outcome> {
    let p = cfg.problem()?;
    let (req, l) = cfg.local_request(&p)?;
    let g = Grid::new(cfg.grid, p.sigma)?;
    let dir = out_dir(cfg);
    let shot = match &req {
        LocalRequest::Explicit(od) => {
            let (ok, lhs) = check_local(od, &p)?;
            if !ok {
                let report = json!({ "hypothesis": { "passed": false, "lhs": lhs } });
                emit(cfg, &dir, None, &report)?;
                return Ok(Outcome::new(exit::HYPOTHESIS, report));
            }
            local_shoot(od, &p, &g, l.max_span)
        }
        LocalRequest::Recipe { tau, beta_param } => {
            let opts = RecipeOptions {
                max_span: l.max_span,
                beta_cap: l.beta_cap,
            };
            theorem_recipe(*tau, *beta_param, &p, &g, &opts)
        }
    };
    let (sol, broke) = match shot {
        Ok(sol) => (sol, false),
        Err(Error::Breakdown { partial, .. }) => (*partial, true),
        Err(Error::RecipeFailed { trace }) => {
            let report = json!({ "hypothesis": { "passed": false, "recipe_trace": trace } });
            emit(cfg, &dir, None, &report)?;
            return Ok(Outcome::new(exit::HYPOTHESIS, report));
        }
        Err(e) => return Err(e.into()),
    };
    let verified = match verify(&sol, &p) {
        Ok(rep) => residuals(&rep, cfg.residual_target),
        Err(e) => json!({ "target": cfg.residual_target, "met": false, "error": e.to_string() }),
    };
    let met = verified["met"] == json!(true);
    let report = json!({
        "provenance": to_value(&sol.provenance),
        "breakdown": broke,
        "interval": [sol.r[0], sol.r[sol.nodes() - 1]],
        "residuals": verified,
    });
    emit(cfg, &dir, Some(&sol), &report)?;
    let code = if broke {
        exit::BREAKDOWN
    } else if met {
        exit::OK
    } else {
        exit::RESIDUAL_MISS
    };
    Ok(Outcome::new(code, report))
}

/// Re-verifies a solution file against the configured data; any failure to
/// load or evaluate the file counts as invalid input.
pub fn cmd_verify(cfg: &RunConfig, solution: Option<&Path>) -> Result<Outcome> {
    let path = solution
        .map(Path::to_owned)
        .or_else(|| cfg.solution_path())
        .ok_or_else(|| CliError::Invalid("no solution file given".into()))?;
    let p = cfg.problem()?;
    let sol = read_solution(&path)?;
    let rep = verify(&sol, &p).map_err(|e| CliError::Solution {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let met = rep.meets(cfg.residual_target);
    let report = json!({ "solution": path, "residuals": residuals(&rep, cfg.residual_target) });
    if let Some(dir) = &cfg.output.dir {
        emit(cfg, dir, None, &report)?;
    }
    Ok(Outcome::new(
        if met { exit::OK } else { exit::RESIDUAL_MISS },
        report,
    ))
}
