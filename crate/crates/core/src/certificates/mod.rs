//! Explicit sufficiency constants and hypothesis checks.
//!
//! The constants depend only on the structure and the envelope
//! `(α, ω₁, ω₂, ρ̄)`, never on `σ`, so they are computed once by
//! [`pipeline_constants`] and reused when sweeping `σ`.

mod lipschitz;

use serde::{Deserialize, Serialize};

pub use lipschitz::{
    check_soundness, estimate_lipschitz, LipschitzBoxes, LipschitzEstimate, SamplingOptions,
    SoundnessCheck, ZRegion, GRID_LIMIT,
};

use crate::error::{Error, Result};
use crate::problem::{sweep, BoundsEnvelope, Mode, OrbitData, ProblemData, DEFAULT_SWEEP};
use crate::structure::HomogeneousStructure;

impl Mode {
    /// Mode implied by the data: sign-indefinite profiles first, then an abelian orbit.
    pub fn of(p: &ProblemData) -> Mode {
        if p.sign_indefinite {
            Mode::Indefinite
        } else if p.structure.is_abelian() {
            Mode::Abelian
        } else {
            Mode::Standard
        }
    }
}

/// `ρ₀(ω₁, ω₂)`; `ρ̄` for an abelian orbit.
pub fn compute_rho0(w1: f64, w2: f64, s: &HomogeneousStructure, env: &BoundsEnvelope) -> f64 {
    if s.is_abelian() {
        return env.rho_bar;
    }
    let mut acc = 0.0;
    for k in 0..s.n() {
        acc += s.dim(k)
            * (s.beta()[k] * w2 * w2 / (2.0 * w1 * w1)
                + gamma_row_sum(s, k) * w2.powi(6) / (4.0 * w1.powi(6)));
    }
    2.0 * acc
}

fn gamma_row_sum(s: &HomogeneousStructure, k: usize) -> f64 {
    let n = s.n();
    (0..n)
        .map(|l| (0..n).map(|m| s.gamma(k, l, m)).sum::<f64>())
        .sum()
}

/// `(ρ₁, σ₁)`.
pub fn compute_rho1_sigma1(
    alpha: f64,
    w1: f64,
    w2: f64,
    rho0: f64,
    s: &HomogeneousStructure,
) -> Result<(f64, f64)> {
    if !(rho0 > 0.0) {
        return Err(Error::DegenerateCertificate(format!(
            "rho0 = {rho0} must be positive; all-zero constants need the abelian mode"
        )));
    }
    let mut acc = 0.0;
    for k in 0..s.n() {
        acc +=
            s.dim(k) * (alpha / (w1 * w1) + gamma_row_sum(s, k) * w2.powi(4) / (2.0 * w1.powi(6)));
    }
    let rho1 = (4.0 * acc.sqrt()).max(2.25 * (rho0 / (2.0 * w2 * w2)).powf(-0.5));
    let d = s.manifold_dim() as f64;
    let r2 = rho1 * rho1;
    let sigma1 = 1.0_f64
        .min(w1 / (4.0 * d))
        .min(2.0 * w1 * w1 / ((2.0 * r2 * w1 + r2 * r2) * (d - 1.0)));
    Ok((rho1, sigma1))
}

/// `(Θ_i)` and its Euclidean norm `Θ`.
pub fn compute_theta(
    alpha: f64,
    w1: f64,
    w2: f64,
    rho1: f64,
    s: &HomogeneousStructure,
) -> (Vec<f64>, f64) {
    let d = s.manifold_dim() as f64;
    let r2 = rho1 * rho1;
    let theta_vec: Vec<f64> = (0..s.n())
        .map(|i| {
            4.0 * s.beta()[i] * r2 / w1
                + 1536.0 * r2 * gamma_row_sum(s, i) * w2.powi(4) / w1.powi(5)
                + 2.0 * w1
                + (2.0 * w1 + 2.0 * w1 * w1 + 8.0 * r2) * (d - 1.0)
                + 8.0 * alpha * r2 / w1
        })
        .collect();
    let theta = theta_vec.iter().map(|t| t * t).sum::<f64>().sqrt();
    (theta_vec, theta)
}

/// `ε₀ = ω₁ / (2d)`.
pub fn compute_eps0(w1: f64, s: &HomogeneousStructure) -> f64 {
    w1 / (2.0 * s.manifold_dim() as f64)
}

/// Inputs of the final step of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaInputs {
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub sigma1: f64,
    pub rho1: f64,
    pub omega1: f64,
}

/// `(ε₀, Σ, σ₀)`.
pub fn compute_sigma0(i: &SigmaInputs, s: &HomogeneousStructure) -> (f64, f64, f64) {
    let eps0 = compute_eps0(i.omega1, s);
    let n = s.n() as f64;
    let t = i.theta;
    let big_sigma = t + i.theta1 * n * n * (t + t * t) + i.theta2 * (i.omega1 + t);
    let sigma0 = i
        .sigma1
        .min((i.omega1 / t).sqrt())
        .min(eps0 / t)
        .min(i.omega1 / (2.0 * big_sigma))
        .min(1.0 / (2.0 * i.rho1 * big_sigma));
    (eps0, big_sigma, sigma0)
}

/// User thresholds replacing `ρ₀`, `σ₀` for sign-indefinite data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IndefiniteThresholds {
    pub rho0: Option<f64>,
    pub sigma0: Option<f64>,
}

impl IndefiniteThresholds {
    pub fn complete(&self) -> bool {
        self.rho0.is_some() && self.sigma0.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateOptions {
    /// Points of the `t`-sweep used by the profile checks.
    pub sweep: usize,
    pub sampling: SamplingOptions,
    pub thresholds: IndefiniteThresholds,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            sweep: DEFAULT_SWEEP,
            sampling: SamplingOptions::default(),
            thresholds: IndefiniteThresholds::default(),
        }
    }
}

/// The `σ`-independent constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConstants {
    pub mode: Mode,
    pub rho0: f64,
    pub rho1: f64,
    pub sigma1: f64,
    pub eps0: f64,
    pub theta_vec: Vec<f64>,
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: Option<f64>,
    pub big_sigma: f64,
    pub sigma0: f64,
    /// Set when the `θ₁` box is empty; `θ₁`, `Σ` are then infinite and `σ₀ = 0`.
    pub empty_box: Option<String>,
}

/// Boxes used by [`estimate_lipschitz`] for the given constants.
pub fn lipschitz_boxes(
    env: &BoundsEnvelope,
    mode: Mode,
    rho0: f64,
    rho1: f64,
    eps0: f64,
) -> LipschitzBoxes {
    let z_region = match mode {
        Mode::Indefinite => ZRegion::Signed {
            omega1: env.omega1,
            omega2: env.omega2,
        },
        _ => ZRegion::Positive,
    };
    LipschitzBoxes {
        alpha: env.alpha,
        omega1: env.omega1,
        omega2: env.omega2,
        rho0,
        rho1,
        eps0,
        z_region,
    }
}

/// Full constant pipeline for one structure and envelope.
pub fn pipeline_constants(
    s: &HomogeneousStructure,
    env: &BoundsEnvelope,
    mode: Mode,
    opts: &CertificateOptions,
) -> Result<PipelineConstants> {
    env.validate()?;
    let (a, w1, w2) = (env.alpha, env.omega1, env.omega2);
    let rho0 = match (mode, opts.thresholds.rho0) {
        (Mode::Indefinite, Some(r)) => r,
        _ => compute_rho0(w1, w2, s, env),
    };
    let (rho1, sigma1) = compute_rho1_sigma1(a, w1, w2, rho0, s)?;
    let (theta_vec, theta) = compute_theta(a, w1, w2, rho1, s);
    let eps0 = compute_eps0(w1, s);
    let boxes = lipschitz_boxes(env, mode, rho0, rho1, eps0);
    let (lip, empty_box) = match estimate_lipschitz(s, &boxes, &opts.sampling) {
        Ok(l) => (l, None),
        Err(Error::EmptyBox(msg)) => {
            log::warn!("{msg}");
            let l = LipschitzEstimate {
                theta1: f64::INFINITY,
                theta2: f64::INFINITY,
                theta3: None,
            };
            (l, Some(msg))
        }
        Err(e) => return Err(e),
    };
    let (_, big_sigma, sigma0) = if empty_box.is_some() {
        (eps0, f64::INFINITY, 0.0)
    } else {
        compute_sigma0(
            &SigmaInputs {
                theta,
                theta1: lip.theta1,
                theta2: lip.theta2,
                sigma1,
                rho1,
                omega1: w1,
            },
            s,
        )
    };
    Ok(PipelineConstants {
        mode,
        rho0,
        rho1,
        sigma1,
        eps0,
        theta_vec,
        theta,
        theta1: lip.theta1,
        theta2: lip.theta2,
        theta3: lip.theta3,
        big_sigma,
        sigma0,
        empty_box,
    })
}

/// One hypothesis verdict with the quantities compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    /// Distance to failure; nonnegative (positive for strict checks) when passed.
    pub margin: f64,
}

impl Verdict {
    fn below(value: f64, bound: f64, strict: bool) -> Self {
        let passed = if strict {
            value < bound
        } else {
            value <= bound
        };
        Verdict {
            passed,
            value,
            bound,
            margin: bound - value,
        }
    }

    fn above(value: f64, bound: f64) -> Self {
        Verdict {
            passed: value > bound,
            value,
            bound,
            margin: value - bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndefiniteVerdict {
    /// Smallest value over `t` of `Σ d_i (max{φ_i, 0}/ω₂² + min{φ_i, 0}/ω₁²)`.
    pub lhs: f64,
    pub rho_threshold: Option<f64>,
    pub sigma_threshold: Option<f64>,
    /// No user thresholds: the verdict cannot be decided.
    pub conditional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checks {
    pub phi_sum: Verdict,
    pub sigma: Verdict,
    pub boundary_gap: Verdict,
    pub phi_derivative: Verdict,
    /// The data actually lies inside the envelope the constants were computed for.
    pub envelope: Verdict,
    pub indefinite: Option<IndefiniteVerdict>,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub mode: Mode,
    pub sigma: f64,
    pub envelope: BoundsEnvelope,
    #[serde(flatten)]
    pub constants: PipelineConstants,
    /// `L = σ² Σ`.
    pub ball_radius: f64,
    pub checks: Checks,
}

impl CertificateReport {
    pub fn conditional(&self) -> bool {
        self.checks
            .indefinite
            .as_ref()
            .is_some_and(|v| v.conditional)
    }

    /// Every verdict holds and none is conditional.
    pub fn passed(&self) -> bool {
        let c = &self.checks;
        c.phi_sum.passed
            && c.sigma.passed
            && c.boundary_gap.passed
            && c.phi_derivative.passed
            && c.envelope.passed
            && !self.conditional()
    }
}

/// Certificate for the data on the default options.
pub fn check_global(p: &ProblemData, env: &BoundsEnvelope) -> Result<CertificateReport> {
    check_global_with(p, env, &CertificateOptions::default())
}

pub fn check_global_with(
    p: &ProblemData,
    env: &BoundsEnvelope,
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    let constants = pipeline_constants(&p.structure, env, Mode::of(p), opts)?;
    check_with_constants(p, env, constants, opts)
}

/// Evaluates the hypotheses of `p` against precomputed constants.
pub fn check_with_constants(
    p: &ProblemData,
    env: &BoundsEnvelope,
    constants: PipelineConstants,
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    p.validate()?;
    let s = &p.structure;
    let mode = Mode::of(p);
    if constants.mode != mode {
        return Err(Error::InvalidProblem(format!(
            "constants were computed for {:?} mode but the data is {:?}",
            constants.mode, mode
        )));
    }
    let (w1, w2) = (env.omega1, env.omega2);
    let mut min_sum = f64::INFINITY;
    let mut min_signed = f64::INFINITY;
    let mut max_abs = 0.0_f64;
    let mut max_deriv = 0.0_f64;
    for t in sweep(opts.sweep) {
        let (mut sum, mut signed) = (0.0, 0.0);
        for (k, prof) in p.phi.iter().enumerate() {
            let v = prof.value(t);
            sum += s.dim(k) * v;
            signed += s.dim(k) * (v.max(0.0) / (w2 * w2) + v.min(0.0) / (w1 * w1));
            max_abs = max_abs.max(v.abs());
            max_deriv = max_deriv.max(prof.derivative(t).abs());
        }
        min_sum = min_sum.min(sum);
        min_signed = min_signed.min(signed);
    }
    let sigma = p.sigma;
    let s2 = sigma * sigma;
    let gap =
        p.a.iter()
            .zip(&p.b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
    let inside =
        p.a.iter()
            .chain(&p.b)
            .all(|&v| v >= env.omega1 && v <= env.omega2);

    let (phi_sum, sigma_check, indefinite) = match mode {
        Mode::Indefinite => {
            let th = opts.thresholds;
            let rho = th.rho0.unwrap_or(constants.rho0);
            let sig = th.sigma0.unwrap_or(constants.sigma0);
            let v = IndefiniteVerdict {
                lhs: min_signed,
                rho_threshold: th.rho0,
                sigma_threshold: th.sigma0,
                conditional: !th.complete(),
            };
            (
                Verdict::above(min_signed, rho),
                Verdict::below(sigma, sig, true),
                Some(v),
            )
        }
        _ => (
            Verdict::above(min_sum, constants.rho0),
            Verdict::below(sigma, constants.sigma0, true),
            None,
        ),
    };
    let envelope = Verdict {
        passed: inside && max_abs <= env.alpha,
        value: max_abs,
        bound: env.alpha,
        margin: env.alpha - max_abs,
    };
    let checks = Checks {
        phi_sum,
        sigma: sigma_check,
        boundary_gap: Verdict::below(gap, s2, false),
        phi_derivative: Verdict::below(max_deriv, s2, false),
        envelope,
        indefinite,
        c1: env.c1,
        c2: env.c2,
    };
    let ball_radius = s2 * constants.big_sigma;
    Ok(CertificateReport {
        mode,
        sigma,
        envelope: *env,
        constants,
        ball_radius,
        checks,
    })
}

/// Left-hand side of the local solvability inequality at orbit `τ`; the
/// verdict is `lhs < 0`.
pub fn check_local(od: &OrbitData, p: &ProblemData) -> Result<(bool, f64)> {
    let s = &p.structure;
    let n = s.n();
    od.validate(Some(n))?;
    let (a, dl) = (&od.a_tau, &od.delta_tau);
    let mut lhs = 0.0;
    for k in 0..n {
        let ak2 = a[k] * a[k];
        let mut term = s.beta()[k] / (2.0 * ak2);
        for l in 0..n {
            let al2 = a[l] * a[l];
            for m in 0..n {
                let g = s.gamma(k, l, m);
                if g != 0.0 {
                    term += g * (ak2 * ak2 - 2.0 * al2 * al2) / (4.0 * ak2 * al2 * a[m] * a[m]);
                }
            }
            term -= s.dim(l) * dl[k] * dl[l] / (ak2 * al2);
        }
        term += dl[k] * dl[k] / (ak2 * ak2);
        term -= p.phi[k].value(od.tau) / ak2;
        lhs += s.dim(k) * term;
    }
    Ok((lhs < 0.0, lhs))
}
