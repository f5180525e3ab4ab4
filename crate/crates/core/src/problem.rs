//! Prescribed data: the transverse length `σ`, orbit profiles `φ̂_i` on
//! `[0, 1]`, boundary coefficients `a`, `b`, the per-orbit data of the local
//! problem, and the hypothesis envelope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::HomogeneousStructure;

/// Default number of sample points for `t`-sweeps over `[0, 1]`.
pub const DEFAULT_SWEEP: usize = 2001;

/// Which family of hypotheses the data is meant to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Standard,
    Abelian,
    Indefinite,
}

/// A smooth scalar function of `t ∈ [0, 1]` with exact first derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothProfile {
    Constant(f64),
    /// Coefficients `c_0, c_1, …` of `Σ c_j t^j`.
    Polynomial(Vec<f64>),
    Spline(NaturalSpline),
}

impl SmoothProfile {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            SmoothProfile::Constant(c) => *c,
            SmoothProfile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &cj| acc * t + cj),
            SmoothProfile::Spline(s) => s.value(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            SmoothProfile::Constant(_) => 0.0,
            SmoothProfile::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (j, &cj)| acc * t + j as f64 * cj),
            SmoothProfile::Spline(s) => s.derivative(t),
        }
    }

    fn check(&self) -> Result<()> {
        let finite = match self {
            SmoothProfile::Constant(c) => c.is_finite(),
            SmoothProfile::Polynomial(c) => !c.is_empty() && c.iter().all(|v| v.is_finite()),
            SmoothProfile::Spline(s) => s.samples.iter().all(|v| v.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidProblem(
                "profile has empty or non-finite coefficients".into(),
            ))
        }
    }
}

/// Natural cubic spline through samples at `t_j = j / (m − 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NaturalSpline {
    samples: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
}

impl TryFrom<Vec<f64>> for NaturalSpline {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        NaturalSpline::new(v)
    }
}

impl From<NaturalSpline> for Vec<f64> {
    fn from(s: NaturalSpline) -> Self {
        s.samples
    }
}

impl NaturalSpline {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let m = samples.len();
        if m < 2 {
            return Err(Error::InvalidProblem(
                "a spline needs at least two samples".into(),
            ));
        }
        let hstep = 1.0 / (m - 1) as f64;
        let mut moments = vec![0.0; m];
        if m > 2 {
            // M_{j-1} + 4 M_j + M_{j+1} = 6 (y_{j+1} - 2 y_j + y_{j-1}) / h^2, M_0 = M_{m-1} = 0
            let k = m - 2;
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for i in 0..k {
                let j = i + 1;
                let rhs =
                    6.0 * (samples[j + 1] - 2.0 * samples[j] + samples[j - 1]) / (hstep * hstep);
                let (cp, dp) = if i == 0 {
                    (0.0, 0.0)
                } else {
                    (c[i - 1], d[i - 1])
                };
                let denom = 4.0 - cp;
                c[i] = 1.0 / denom;
                d[i] = (rhs - dp) / denom;
            }
            for i in (0..k).rev() {
                moments[i + 1] = d[i] - c[i] * moments[i + 2];
            }
        }
        Ok(NaturalSpline { samples, moments })
    }

    fn locate(&self, t: f64) -> (usize, f64, f64) {
        let m = self.samples.len();
        let hstep = 1.0 / (m - 1) as f64;
        let j = ((t / hstep).floor().max(0.0) as usize).min(m - 2);
        let u = t - j as f64 * hstep;
        (j, u, hstep)
    }

    pub fn value(&self, t: f64) -> f64 {
        let (j, u, hs) = self.locate(t);
        let (y0, y1) = (self.samples[j], self.samples[j + 1]);
        let (m0, m1) = (self.moments[j], self.moments[j + 1]);
        let v = hs - u;
        m0 * v * v * v / (6.0 * hs)
            + m1 * u * u * u / (6.0 * hs)
            + (y0 / hs - m0 * hs / 6.0) * v
            + (y1 / hs - m1 * hs / 6.0) * u
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (j, u, hs) = self.locate(t);
        let (y0, y1) = (self.samples[j], self.samples[j + 1]);
        let (m0, m1) = (self.moments[j], self.moments[j + 1]);
        let v = hs - u;
        -m0 * v * v / (2.0 * hs) + m1 * u * u / (2.0 * hs) + (y1 - y0) / hs - (m1 - m0) * hs / 6.0
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemData {
    pub structure: HomogeneousStructure,
    pub sigma: f64,
    pub phi: Vec<SmoothProfile>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default)]
    pub sign_indefinite: bool,
}

impl ProblemData {
    pub fn new(
        structure: HomogeneousStructure,
        sigma: f64,
        phi: Vec<SmoothProfile>,
        a: Vec<f64>,
        b: Vec<f64>,
        sign_indefinite: bool,
    ) -> Result<Self> {
        let p = ProblemData {
            structure,
            sigma,
            phi,
            a,
            b,
            sign_indefinite,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.structure.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.phi.len() != n || self.a.len() != n || self.b.len() != n {
            return Err(Error::InvalidProblem(format!(
                "expected {n} profiles and boundary coefficients, got phi={}, a={}, b={}",
                self.phi.len(),
                self.a.len(),
                self.b.len()
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "sigma = {} must be positive",
                self.sigma
            )));
        }
        for (name, v) in [("a", &self.a), ("b", &self.b)] {
            if let Some(i) = v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidProblem(format!(
                    "{name}_{} = {} must be positive",
                    i + 1,
                    v[i]
                )));
            }
        }
        for prof in &self.phi {
            prof.check()?;
        }
        if !self.sign_indefinite {
            for (i, prof) in self.phi.iter().enumerate() {
                let min = sweep(DEFAULT_SWEEP)
                    .map(|t| prof.value(t))
                    .fold(f64::INFINITY, f64::min);
                if !(min > 0.0) {
                    return Err(Error::InvalidProblem(format!(
                        "phi_{} reaches {min} on [0, 1]; use indefinite mode for sign-changing data",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same data on a different transverse length.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        let mut p = self.clone();
        p.sigma = sigma;
        p.validate()?;
        Ok(p)
    }
}

/// Uniform sample points `0, 1/(m−1), …, 1`.
pub fn sweep(m: usize) -> impl Iterator<Item = f64> + Clone {
    let m = m.max(2);
    (0..m).map(move |j| {
        if j + 1 == m {
            1.0
        } else {
            j as f64 / (m - 1) as f64
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitData {
    pub tau: f64,
    pub a_tau: Vec<f64>,
    pub delta_tau: Vec<f64>,
}

impl OrbitData {
    pub fn new(tau: f64, a_tau: Vec<f64>, delta_tau: Vec<f64>) -> Result<Self> {
        let od = OrbitData {
            tau,
            a_tau,
            delta_tau,
        };
        od.validate(None)?;
        Ok(od)
    }

    /// Checks the invariants; with `n` also checks the lengths.
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidProblem(format!(
                "tau = {} is outside [0, 1]",
                self.tau
            )));
        }
        if self.a_tau.len() != self.delta_tau.len() || n.is_some_and(|n| n != self.a_tau.len()) {
            return Err(Error::InvalidProblem(
                "orbit data has inconsistent lengths".into(),
            ));
        }
        if self.a_tau.iter().any(|x| !(*x > 0.0 && x.is_finite()))
            || self.delta_tau.iter().any(|x| !x.is_finite())
        {
            return Err(Error::InvalidProblem(
                "a_tau must be positive and delta_tau finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsEnvelope {
    pub alpha: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub c1: f64,
    pub c2: f64,
    pub rho_bar: f64,
}

impl BoundsEnvelope {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha", self.alpha),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("c1", self.c1),
            ("c2", self.c2),
            ("rho_bar", self.rho_bar),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidProblem(format!(
                "envelope {name} = {v} must be positive"
            )));
        }
        if self.omega1 > self.omega2 {
            return Err(Error::InvalidProblem(format!(
                "omega1 = {} exceeds omega2 = {}",
                self.omega1, self.omega2
            )));
        }
        Ok(())
    }
}

/// Smallest positive value used in place of a vanishing envelope constant.
pub const ENVELOPE_FLOOR: f64 = 1e-30;

/// Envelope read off the data on the default sweep.
pub fn tightest_envelope(p: &ProblemData, rho_bar: f64) -> Result<BoundsEnvelope> {
    tightest_envelope_with(p, rho_bar, DEFAULT_SWEEP)
}

/// Envelope read off the data on a sweep of `samples` points.
///
/// `α` is the largest `|φ̂_i|`, which is the largest `φ̂_i` for positive data.
pub fn tightest_envelope_with(
    p: &ProblemData,
    rho_bar: f64,
    samples: usize,
) -> Result<BoundsEnvelope> {
    p.validate()?;
    let mut alpha = 0.0_f64;
    let mut dmax = 0.0_f64;
    for t in sweep(samples) {
        for prof in &p.phi {
            alpha = alpha.max(prof.value(t).abs());
            dmax = dmax.max(prof.derivative(t).abs());
        }
    }
    let pairs = p.a.iter().zip(&p.b);
    let omega1 = pairs
        .clone()
        .map(|(a, b)| a.min(*b))
        .fold(f64::INFINITY, f64::min);
    let omega2 = pairs.clone().map(|(a, b)| a.max(*b)).fold(0.0, f64::max);
    let gap = pairs.map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let s2 = p.sigma * p.sigma;
    let env = BoundsEnvelope {
        alpha: alpha.max(ENVELOPE_FLOOR),
        omega1,
        omega2,
        c1: (gap / s2).max(ENVELOPE_FLOOR),
        c2: (dmax / s2).max(ENVELOPE_FLOOR),
        rho_bar,
    };
    env.validate()?;
    Ok(env)
}

/// The profiles reparameterized to `r = σ t`.
#[derive(Debug, Clone, Copy)]
pub struct ProfilesOnR<'a> {
    phi: &'a [SmoothProfile],
    sigma: f64,
}

pub fn profiles_on_r(p: &ProblemData) -> ProfilesOnR<'_> {
    ProfilesOnR {
        phi: &p.phi,
        sigma: p.sigma,
    }
}

impl ProfilesOnR<'_> {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn t_of(&self, r: f64) -> Result<f64> {
        let slack = 1e-12 * self.sigma;
        if !(r >= -slack && r <= self.sigma + slack) {
            return Err(Error::DomainError(format!(
                "r = {r} is outside [0, {}]",
                self.sigma
            )));
        }
        Ok((r / self.sigma).clamp(0.0, 1.0))
    }

    /// `φ_i(r)` written into `out`.
    pub fn phi_into(&self, r: f64, out: &mut [f64]) -> Result<()> {
        let t = self.t_of(r)?;
        for (o, prof) in out.iter_mut().zip(self.phi) {
            *o = prof.value(t);
        }
        Ok(())
    }

    /// `φ_i′(r)` written into `out`.
    pub fn phi_p_into(&self, r: f64, out: &mut [f64]) -> Result<()> {
        let t = self.t_of(r)?;
        for (o, prof) in out.iter_mut().zip(self.phi) {
            *o = prof.derivative(t) / self.sigma;
        }
        Ok(())
    }

    pub fn phi(&self, r: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.phi.len()];
        self.phi_into(r, &mut out)?;
        Ok(out)
    }

    pub fn phi_p(&self, r: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.phi.len()];
        self.phi_p_into(r, &mut out)?;
        Ok(out)
    }
}
