use serde::{Deserialize, Serialize};

use super::ode::{integrate_to_targets, AdaptiveOptions, Halt};
use super::{Grid, MetricSolution, Provenance};
use crate::certificates::check_local;
use crate::error::{Error, Result};
use crate::geometry::{f_tilde_unchecked, h1_unchecked, h2_unchecked, k_unchecked};
use crate::problem::{profiles_on_r, OrbitData, ProblemData};

/// Largest `β` tried by [`theorem_recipe`].
pub const RECIPE_BETA_CAP: f64 = 1_048_576.0;

/// Shooting stops once `min f_i` or `h` drops below this.
const POSITIVITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecipeOptions {
    /// Half-width of the requested interval in units of `σ`.
    pub max_span: f64,
    pub beta_cap: f64,
}

impl Default for RecipeOptions {
    fn default() -> Self {
        RecipeOptions {
            max_span: 1.0,
            beta_cap: RECIPE_BETA_CAP,
        }
    }
}

/// How far one direction of the shoot got.
struct Leg {
    /// `(node index, state)` pairs in integration order.
    states: Vec<(usize, Vec<f64>)>,
    /// Distance from `στ` actually covered.
    reach: f64,
    /// Positivity or finiteness was lost before the requested end.
    broke: bool,
}

/// Solves the local problem at the orbit `r = στ` from `f = a_τ`,
/// `f′ = −h δ_τ^a`, with `h(στ)` fixed by the local inequality, and returns the
/// solution on the grid nodes inside the reached symmetric interval.
///
/// `max_span` is the requested half-width in units of `σ`.
pub fn local_shoot(
    od: &OrbitData,
    p: &ProblemData,
    g: &Grid,
    max_span: f64,
) -> Result<MetricSolution> {
    p.validate()?;
    let (ok, lhs) = check_local(od, p)?;
    if !ok {
        return Err(Error::LocalHypothesisFailed { lhs });
    }
    if !(max_span > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "max_span = {max_span} must be positive"
        )));
    }
    if (g.sigma() - p.sigma).abs() > 1e-15 * p.sigma {
        return Err(Error::InvalidProblem(format!(
            "grid length {} differs from sigma = {}",
            g.sigma(),
            p.sigma
        )));
    }
    let s = &p.structure;
    let n = s.n();
    let sigma = p.sigma;
    let r0 = sigma * od.tau;
    let prof = profiles_on_r(p);

    let a = &od.a_tau;
    let da: Vec<f64> = od.delta_tau.iter().zip(a).map(|(d, a)| d / a).collect();
    let phi0 = prof.phi(r0)?;
    let radicand = h2_unchecked(a, &phi0, s) + 1.0 - h1_unchecked(a, &da, s);
    if !(radicand > 0.0) {
        return Err(Error::LocalHypothesisFailed { lhs: -radicand });
    }
    let h0 = radicand.powf(-0.5);
    let mut y0 = Vec::with_capacity(2 * n + 1);
    y0.extend_from_slice(a);
    y0.extend(da.iter().map(|d| -h0 * d));
    y0.push(h0);

    let rhs = |r: f64, y: &[f64], out: &mut [f64]| {
        let r = r.clamp(0.0, sigma);
        let (x, rest) = y.split_at(n);
        let (v, hh) = rest.split_at(n);
        let (phi, phi_p) = match (prof.phi(r), prof.phi_p(r)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                out.fill(f64::NAN);
                return;
            }
        };
        out[..n].copy_from_slice(v);
        f_tilde_unchecked(hh[0], x, v, &phi, &phi_p, s, &mut out[n..2 * n]);
        out[2 * n] = k_unchecked(hh[0], x, v, &phi_p, s);
    };
    let guard = |_r: f64, y: &[f64]| {
        y.iter().all(|v| v.is_finite())
            && y[..n].iter().all(|&f| f >= POSITIVITY_FLOOR)
            && y[2 * n] >= POSITIVITY_FLOOR
    };
    let opts = AdaptiveOptions::default();
    let m = g.len();
    let span = sigma * max_span;

    let leg = |forward: bool| -> Leg {
        let end = if forward {
            (r0 + span).min(sigma)
        } else {
            (r0 - span).max(0.0)
        };
        let idx: Vec<usize> = if forward {
            (0..m).filter(|&j| g.r(j) > r0 && g.r(j) <= end).collect()
        } else {
            (0..m)
                .rev()
                .filter(|&j| g.r(j) < r0 && g.r(j) >= end)
                .collect()
        };
        let mut targets: Vec<f64> = idx.iter().map(|&j| g.r(j)).collect();
        if targets.last() != Some(&end) && end != r0 {
            targets.push(end);
        }
        let (ys, halt) = integrate_to_targets(
            &mut rhs.clone(),
            &mut guard.clone(),
            r0,
            &y0,
            &targets,
            &opts,
        );
        let reach = match halt {
            Halt::Completed => (end - r0).abs(),
            Halt::Guard { t } | Halt::NonFinite { t } | Halt::StepUnderflow { t } => (t - r0).abs(),
        };
        let states = idx.into_iter().zip(ys).collect();
        Leg {
            states,
            reach,
            broke: halt != Halt::Completed,
        }
    };
    let fwd = leg(true);
    let bwd = leg(false);

    // directions that ran into the end of [0, σ] do not limit κ
    let mut kappa = max_span.min(od.tau.max(1.0 - od.tau));
    for l in [&fwd, &bwd] {
        if l.broke {
            kappa = kappa.min(l.reach / sigma);
        }
    }
    let lo = r0 - kappa * sigma;
    let hi = r0 + kappa * sigma;

    let mut rows: Vec<(usize, Vec<f64>)> = bwd.states.into_iter().rev().collect();
    if let Some(j) = (0..m).find(|&j| g.r(j) == r0) {
        rows.push((j, y0.clone()));
    }
    rows.extend(fwd.states);
    rows.retain(|(j, _)| {
        let r = g.r(*j);
        r >= lo && r <= hi
    });

    let mut sol = MetricSolution {
        n,
        r: Vec::with_capacity(rows.len()),
        f: Vec::with_capacity(rows.len() * n),
        fp: Vec::with_capacity(rows.len() * n),
        h: Vec::with_capacity(rows.len()),
        hp: Vec::with_capacity(rows.len()),
        provenance: Provenance::LocalShoot {
            tau: od.tau,
            kappa,
            h_at_tau: h0,
            lhs,
        },
    };
    for (j, y) in rows {
        let r = g.r(j);
        let hh = y[2 * n];
        sol.r.push(r);
        sol.f.extend_from_slice(&y[..n]);
        sol.fp.extend_from_slice(&y[n..2 * n]);
        sol.h.push(hh);
        sol.hp
            .push(k_unchecked(hh, &y[..n], &y[n..2 * n], &prof.phi_p(r)?, s));
    }

    if fwd.broke || bwd.broke {
        log::warn!(
            "local shoot at tau = {} broke down at kappa = {kappa:.6e}",
            od.tau
        );
        return Err(Error::Breakdown {
            kappa,
            partial: Box::new(sol),
        });
    }
    sol.validate()?;
    Ok(sol)
}

/// Boundary data interpolated between the two ends, `S′ = β Q`, with `β`
/// doubled from `beta_param` until the local inequality holds.
pub fn theorem_recipe(
    tau: f64,
    beta_param: f64,
    p: &ProblemData,
    g: &Grid,
    opts: &RecipeOptions,
) -> Result<MetricSolution> {
    p.validate()?;
    if !(beta_param > 0.0 && beta_param.is_finite()) {
        return Err(Error::InvalidProblem(format!(
            "beta = {beta_param} must be positive"
        )));
    }
    let a_tau: Vec<f64> =
        p.a.iter()
            .zip(&p.b)
            .map(|(a, b)| (1.0 - tau) * a + tau * b)
            .collect();
    let mut trace = Vec::new();
    let mut beta = beta_param;
    while beta <= opts.beta_cap {
        let od = OrbitData::new(tau, a_tau.clone(), vec![beta; a_tau.len()])?;
        let (ok, lhs) = check_local(&od, p)?;
        trace.push((beta, lhs));
        if ok {
            log::info!("recipe: beta = {beta} gives lhs = {lhs:.6e}");
            return local_shoot(&od, p, g, opts.max_span);
        }
        beta *= 2.0;
    }
    Err(Error::RecipeFailed { trace })
}
