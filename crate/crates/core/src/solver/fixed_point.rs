use serde::{Deserialize, Serialize};

use super::quadrature::{column, cumulative};
use super::{background, Background, Grid, MetricSolution, PathPair, Provenance};
use crate::certificates::CertificateReport;
use crate::error::{Error, Result};
use crate::geometry::{f_tilde_unchecked, h_unchecked, k_unchecked};
use crate::par::{self, Execution};
use crate::problem::ProblemData;

/// Relative slack on the ball radius before membership counts as violated.
const BALL_SLACK: f64 = 1e-9;
/// Hartman ratios above this are reported as a bound violation.
const HARTMAN_SLACK: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Damping factors tried in order; each restart begins from zero.
    pub damping: Vec<f64>,
    pub execution: Execution,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tol: 1e-10,
            max_iter: 200,
            damping: vec![1.0, 0.5, 0.25],
            execution: Execution::default(),
        }
    }
}

/// One application of the map `C` to `(μ, ν)`.
pub fn apply_c(
    pp: &PathPair,
    bg: &Background,
    p: &ProblemData,
    exec: Execution,
) -> Result<PathPair> {
    let s = &p.structure;
    let n = bg.n;
    let g = &bg.grid;
    let m = g.len();
    if pp.n != n || pp.nodes() != m {
        return Err(Error::InvalidProblem(
            "path pair does not match the background grid".into(),
        ));
    }
    let sigma = g.sigma();
    let dr = g.step();

    let rows = par::try_map_indexed(exec, m, |j| {
        let row = j * n..(j + 1) * n;
        let hh = bg.h[j] + pp.nu[j];
        let x: Vec<f64> = bg.f[row.clone()]
            .iter()
            .zip(&pp.mu[row.clone()])
            .map(|(a, b)| a + b)
            .collect();
        if !(hh > 0.0) || x.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NonPositive(format!(
                "iterate leaves the positive cone at r = {}",
                g.r(j)
            )));
        }
        let y: Vec<f64> = bg.fp[row.clone()]
            .iter()
            .zip(&pp.mu_p[row.clone()])
            .map(|(a, b)| a + b)
            .collect();
        let mut out = vec![0.0; n];
        f_tilde_unchecked(
            hh,
            &x,
            &y,
            &bg.phi[row.clone()],
            &bg.phi_p[row],
            s,
            &mut out,
        );
        Ok(out)
    })?;
    let gvec: Vec<f64> = rows.into_iter().flatten().collect();

    let mut xi = vec![0.0; n * m];
    let mut xi_p = vec![0.0; n * m];
    for i in 0..n {
        let gi = column(&gvec, n, i);
        let first = cumulative(&gi, dr);
        let second = cumulative(&first, dr);
        // ξ = ∫∫g − (r/σ)∫₀^σ∫g vanishes at both ends
        let c = second[m - 1] / sigma;
        for j in 0..m {
            xi[j * n + i] = if j == 0 || j + 1 == m {
                0.0
            } else {
                second[j] - c * g.r(j)
            };
            xi_p[j * n + i] = first[j] - c;
        }
    }

    let x0: Vec<f64> = (0..n).map(|i| bg.f[i] + xi[i]).collect();
    let y0: Vec<f64> = (0..n).map(|i| bg.fp[i] + xi_p[i]).collect();
    let head = -bg.h[0] + h_unchecked(&x0, &y0, &bg.phi[..n], s)?;
    let integrand = par::try_map_indexed(exec, m, |j| {
        let row = j * n..(j + 1) * n;
        let hh = bg.h[j] + pp.nu[j];
        let x: Vec<f64> = bg.f[row.clone()]
            .iter()
            .zip(&xi[row.clone()])
            .map(|(a, b)| a + b)
            .collect();
        let y: Vec<f64> = bg.fp[row.clone()]
            .iter()
            .zip(&xi_p[row.clone()])
            .map(|(a, b)| a + b)
            .collect();
        if !(hh > 0.0) || x.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NonPositive(format!(
                "iterate leaves the positive cone at r = {}",
                g.r(j)
            )));
        }
        Ok(k_unchecked(hh, &x, &y, &bg.phi_p[row], s) - bg.hp[j])
    })?;
    let zeta: Vec<f64> = cumulative(&integrand, dr)
        .into_iter()
        .map(|v| head + v)
        .collect();
    Ok(PathPair {
        n,
        mu: xi,
        mu_p: xi_p,
        nu: zeta,
    })
}

/// `max|ξ| / (σ²Θ/8)` and `max|ξ′| / (σΘ/2)`; both at most 1 when the
/// Hartman bounds hold.
pub fn hartman_ratios(pp: &PathPair, sigma: f64, theta: f64) -> (f64, f64) {
    let sup = |v: &[f64]| {
        v.chunks_exact(pp.n)
            .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    };
    (
        sup(&pp.mu) / (sigma * sigma * theta / 8.0),
        sup(&pp.mu_p) / (sigma * theta / 2.0),
    )
}

struct Attempt {
    pair: PathPair,
    iterations: usize,
    final_delta: f64,
    hartman_max: f64,
}

fn iterate(
    bg: &Background,
    p: &ProblemData,
    cert: &CertificateReport,
    certified: bool,
    lambda: f64,
    opts: &FixedPointOptions,
) -> Result<Attempt> {
    let sigma = p.sigma;
    let theta = cert.constants.theta;
    let radius = cert.ball_radius;
    let mut pp = PathPair::zeros(bg.n, bg.grid.len());
    let mut hartman_max = 0.0_f64;
    let mut last_delta = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let c = apply_c(&pp, bg, p, opts.execution)?;
        let (hx, hxp) = hartman_ratios(&c, sigma, theta);
        hartman_max = hartman_max.max(hx).max(hxp);
        if certified {
            if hx.max(hxp) > HARTMAN_SLACK {
                return Err(Error::BoundViolation(format!(
                    "Hartman bound exceeded at iteration {it}: ratios {hx:.4} (xi), {hxp:.4} (xi')"
                )));
            }
            let norm = c.b_norm(sigma);
            if norm > radius * (1.0 + BALL_SLACK) {
                return Err(Error::BoundViolation(format!(
                    "iterate {it} leaves the ball: B-norm {norm:.6e} > L = {radius:.6e}"
                )));
            }
        }
        let delta = c.diff(&pp).b_norm(sigma);
        log::debug!("fixed point: damping {lambda}, iteration {it}, delta {delta:.3e}");
        if !delta.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                last_delta: delta,
            });
        }
        last_delta = delta;
        if delta <= opts.tol {
            return Ok(Attempt {
                pair: c,
                iterations: it,
                final_delta: delta,
                hartman_max,
            });
        }
        pp = pp.blend(&c, lambda);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        last_delta,
    })
}

/// Iterates `C` from zero and assembles `f = f̄ + u`, `h = h̄ + v`.
pub fn fixed_point_solve(
    p: &ProblemData,
    cert: &CertificateReport,
    g: &Grid,
    opts: &FixedPointOptions,
) -> Result<MetricSolution> {
    if !cert.checks.sigma.passed {
        log::warn!(
            "sigma = {:.6e} is outside the certified range (sigma0 = {:.6e}); iterating anyway",
            p.sigma,
            cert.constants.sigma0
        );
    }
    if opts.damping.is_empty() || opts.damping.iter().any(|l| !(*l > 0.0 && *l <= 1.0)) {
        return Err(Error::InvalidProblem(
            "damping factors must lie in (0, 1]".into(),
        ));
    }
    let certified = cert.passed();
    let bg = background(p, g)?;
    let mut last_err = None;
    for &lambda in &opts.damping {
        match iterate(&bg, p, cert, certified, lambda, opts) {
            Ok(a) => return assemble(p, &bg, a, lambda, certified.then_some(cert.ball_radius)),
            Err(e @ Error::BoundViolation(_)) => return Err(e),
            Err(e) => {
                log::info!("fixed point with damping {lambda} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    Err(last_err.expect("at least one damping factor"))
}

fn assemble(
    p: &ProblemData,
    bg: &Background,
    a: Attempt,
    lambda: f64,
    radius: Option<f64>,
) -> Result<MetricSolution> {
    let s = &p.structure;
    let n = bg.n;
    let m = bg.grid.len();
    let ball_norm = a.pair.b_norm(p.sigma);
    let f: Vec<f64> = bg.f.iter().zip(&a.pair.mu).map(|(x, u)| x + u).collect();
    let fp: Vec<f64> = bg.fp.iter().zip(&a.pair.mu_p).map(|(x, u)| x + u).collect();
    let h: Vec<f64> = bg.h.iter().zip(&a.pair.nu).map(|(x, v)| x + v).collect();
    // exact boundary values: u vanishes at both ends
    let mut f = f;
    f[..n].copy_from_slice(&p.a);
    f[(m - 1) * n..].copy_from_slice(&p.b);
    let hp = (0..m)
        .map(|j| {
            let row = j * n..(j + 1) * n;
            k_unchecked(
                h[j].max(f64::MIN_POSITIVE),
                &f[row.clone()],
                &fp[row.clone()],
                &bg.phi_p[row],
                s,
            )
        })
        .collect();
    let sol = MetricSolution {
        n,
        r: bg.grid.nodes(),
        f,
        fp,
        h,
        hp,
        provenance: Provenance::GlobalFixedPoint {
            iterations: a.iterations,
            damping: lambda,
            final_delta: a.final_delta,
            hartman_max: a.hartman_max,
            ball_norm,
            ball_radius: radius,
        },
    };
    sol.validate()?;
    Ok(sol)
}
