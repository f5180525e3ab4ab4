//! Sampled Lipschitz constants of `H`, `K` and `F̃` over their boxes.
//!
//! Gradients of `H` and `K` are closed-form; `F̃` is differentiated by central
//! differences. Suprema are taken over a tensor grid when it has at most
//! [`GRID_LIMIT`] points and over a randomly shifted Halton set otherwise; the
//! box corners are always included.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{f_tilde_unchecked, h2_unchecked, h_unchecked, k_unchecked};
use crate::par::{self, Execution};
use crate::structure::HomogeneousStructure;

/// Largest tensor grid sampled exhaustively.
pub const GRID_LIMIT: usize = 100_000;
/// Corners are enumerated only up to this many degrees of freedom.
const MAX_CORNER_DOF: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingOptions {
    pub seed: u64,
    /// Quasi-random points when the tensor grid is too large.
    pub points: usize,
    pub axis_points: usize,
    pub safety: f64,
    /// Also estimate the Lipschitz constant of `F̃` (diagnostic).
    pub theta3: bool,
    pub execution: Execution,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            seed: 0,
            points: 100_000,
            axis_points: 9,
            safety: 1.5,
            theta3: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: Option<f64>,
}

/// Constraint on the `z` box of `θ₁`: `Σ_k d_k g(z_k) ≥ ρ₀` with `z ∈ [lo, α]ⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZRegion {
    /// `z ∈ [0, α]ⁿ`, `g(z) = z`.
    Positive,
    /// `z ∈ [−α, α]ⁿ`, `g(z) = max(z, 0)/ω₂² + min(z, 0)/ω₁²`.
    Signed { omega1: f64, omega2: f64 },
}

impl ZRegion {
    fn lower(&self, alpha: f64) -> f64 {
        match self {
            ZRegion::Positive => 0.0,
            ZRegion::Signed { .. } => -alpha,
        }
    }

    fn g(&self, z: f64) -> f64 {
        match *self {
            ZRegion::Positive => z,
            ZRegion::Signed { omega1, omega2 } => {
                z.max(0.0) / (omega2 * omega2) + z.min(0.0) / (omega1 * omega1)
            }
        }
    }

    fn weight(&self, s: &HomogeneousStructure, z: &[f64]) -> f64 {
        z.iter()
            .enumerate()
            .map(|(k, &zk)| s.dim(k) * self.g(zk))
            .sum()
    }
}

/// Boxes for the three constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzBoxes {
    pub alpha: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub eps0: f64,
    pub z_region: ZRegion,
}

impl LipschitzBoxes {
    /// Moves `z` toward the `α` corner until the weight constraint holds.
    fn feasible_z(&self, s: &HomogeneousStructure, z: &mut [f64]) {
        let r = self.z_region;
        if r.weight(s, z) >= self.rho0 {
            return;
        }
        let start = z.to_vec();
        let at = |lam: f64, out: &mut [f64]| {
            for (o, &z0) in out.iter_mut().zip(&start) {
                *o = z0 + lam * (self.alpha - z0);
            }
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut probe = z.to_vec();
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            at(mid, &mut probe);
            if r.weight(s, &probe) >= self.rho0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        at(hi, z);
    }

    pub fn check_nonempty(&self, s: &HomogeneousStructure) -> Result<()> {
        let corner = vec![self.alpha; s.n()];
        let best = self.z_region.weight(s, &corner);
        if best < self.rho0 {
            return Err(Error::EmptyBox(format!(
                "the constraint Σ d_k z_k ≥ {:.6e} cannot hold on the z box (largest value {best:.6e})",
                self.rho0
            )));
        }
        Ok(())
    }
}

#[inline]
fn lerp(lo: f64, hi: f64, u: f64) -> f64 {
    lo + (hi - lo) * u
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut c = 2u64;
    while out.len() < count {
        if out
            .iter()
            .take_while(|&&p| p * p <= c)
            .all(|&p| !c.is_multiple_of(p))
        {
            out.push(c);
        }
        c += 1;
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut acc) = (inv, 0.0);
    while i > 0 {
        acc += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    acc
}

/// Deterministic list of points in `[0, 1]^dof`.
#[derive(Debug, Clone)]
enum Plan {
    Grid { axis: usize },
    Halton { bases: Vec<u64>, shift: Vec<f64> },
}

#[derive(Debug, Clone)]
struct PointSet {
    dof: usize,
    plan: Plan,
    body: usize,
    corners: usize,
}

impl PointSet {
    fn new(dof: usize, opts: &SamplingOptions, stream: u64) -> Self {
        let axis = opts.axis_points.max(2);
        let grid = (axis as f64).powi(dof as i32);
        let (plan, body) = if grid <= GRID_LIMIT as f64 {
            (Plan::Grid { axis }, grid as usize)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(stream);
            let shift = (0..dof).map(|_| rng.random::<f64>()).collect();
            let count = opts.points.max(1);
            (
                Plan::Halton {
                    bases: primes(dof),
                    shift,
                },
                count,
            )
        };
        let corners = if dof <= MAX_CORNER_DOF { 1 << dof } else { 0 };
        PointSet {
            dof,
            plan,
            body,
            corners,
        }
    }

    fn len(&self) -> usize {
        self.body + self.corners
    }

    fn point(&self, i: usize, u: &mut [f64]) {
        if i >= self.body {
            let c = i - self.body;
            for (j, uj) in u.iter_mut().enumerate() {
                *uj = ((c >> j) & 1) as f64;
            }
            return;
        }
        match &self.plan {
            Plan::Grid { axis } => {
                let mut rest = i;
                for uj in u.iter_mut() {
                    *uj = (rest % axis) as f64 / (axis - 1) as f64;
                    rest /= axis;
                }
            }
            Plan::Halton { bases, shift } => {
                for j in 0..self.dof {
                    let v = radical_inverse(i as u64 + 1, bases[j]) + shift[j];
                    u[j] = v - v.floor();
                }
            }
        }
    }
}

/// Supremum of `eval` over the point set; errors from `eval` surface by index.
fn sup<F>(set: &PointSet, exec: Execution, eval: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    let vals = par::try_map_indexed(exec, set.len(), |i| {
        let mut u = vec![0.0; set.dof];
        set.point(i, &mut u);
        eval(&u)
    })?;
    let m = vals.iter().copied().fold(0.0_f64, |a, b| {
        if a.is_nan() || b.is_nan() {
            f64::NAN
        } else {
            a.max(b)
        }
    });
    if !m.is_finite() {
        return Err(Error::DegenerateCertificate(
            "non-finite gradient in Lipschitz sampling".into(),
        ));
    }
    Ok(m)
}

/// Euclidean `y`-gradient norm of `H` and the largest `|∂H/∂(y_k y_l)|`.
pub(crate) fn h_gradients(
    x: &[f64],
    y: &[f64],
    z: &[f64],
    s: &HomogeneousStructure,
) -> Result<(f64, f64)> {
    let h = h_unchecked(x, y, z, s)?;
    let h2 = h2_unchecked(x, z, s);
    // H1 = 1 − S² + Σ d_k q_k², q = y/x, S = Σ d_k q_k
    let sum: f64 = (0..s.n()).map(|k| s.dim(k) * y[k] / x[k]).sum();
    let scale = 1.0 / (2.0 * h * h2);
    let mut g2 = 0.0;
    let mut pmax = 0.0_f64;
    for k in 0..s.n() {
        let dk = s.dim(k);
        let dh1 = 2.0 * dk * (y[k] / x[k] - sum) / x[k];
        g2 += (dh1 * scale).powi(2);
        for l in 0..s.n() {
            let mut c = -dk * s.dim(l) / (x[k] * x[l]);
            if k == l {
                c += dk / (x[k] * x[k]);
            }
            pmax = pmax.max((c * scale).abs());
        }
    }
    Ok((g2.sqrt(), pmax))
}

/// `max(|∂K/∂p|, |∇ₓK|, |∇_yK|)`.
pub(crate) fn k_gradient(p: f64, x: &[f64], y: &[f64], w: &[f64], s: &HomogeneousStructure) -> f64 {
    let (mut dp, mut gx, mut gy) = (0.0, 0.0, 0.0);
    for i in 0..s.n() {
        let d = s.dim(i);
        let xi = x[i];
        dp += d * (y[i] / xi - 1.5 * p * p * w[i] / (xi * xi));
        gx += (d * (-p * y[i] / (xi * xi) + p * p * p * w[i] / (xi * xi * xi))).powi(2);
        gy += (d * p / xi).powi(2);
    }
    dp.abs().max(gx.sqrt()).max(gy.sqrt())
}

/// `max(|∂F̃/∂p|, ‖∂F̃/∂x‖_F, ‖∂F̃/∂y‖_F)` by central differences.
fn f_tilde_gradient(
    p: f64,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    w: &[f64],
    s: &HomogeneousStructure,
) -> f64 {
    let n = s.n();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let step = |v: f64| 1e-6 * v.abs().max(1.0);
    let dist = |a: &[f64], b: &[f64], h: f64| -> f64 {
        a.iter()
            .zip(b)
            .map(|(u, v)| ((u - v) / (2.0 * h)).powi(2))
            .sum()
    };
    let hp = step(p);
    f_tilde_unchecked(p + hp, x, y, z, w, s, &mut plus);
    f_tilde_unchecked(p - hp, x, y, z, w, s, &mut minus);
    let dp = dist(&plus, &minus, hp).sqrt();
    let mut xv = x.to_vec();
    let mut yv = y.to_vec();
    let (mut fx, mut fy) = (0.0, 0.0);
    for j in 0..n {
        let hx = step(x[j]);
        xv[j] = x[j] + hx;
        f_tilde_unchecked(p, &xv, y, z, w, s, &mut plus);
        xv[j] = x[j] - hx;
        f_tilde_unchecked(p, &xv, y, z, w, s, &mut minus);
        xv[j] = x[j];
        fx += dist(&plus, &minus, hx);

        let hy = step(y[j]);
        yv[j] = y[j] + hy;
        f_tilde_unchecked(p, x, &yv, z, w, s, &mut plus);
        yv[j] = y[j] - hy;
        f_tilde_unchecked(p, x, &yv, z, w, s, &mut minus);
        yv[j] = y[j];
        fy += dist(&plus, &minus, hy);
    }
    dp.max(fx.sqrt()).max(fy.sqrt())
}

/// Sampled `θ₁`, `θ₂` (and optionally `θ₃`) times the safety factor.
pub fn estimate_lipschitz(
    s: &HomogeneousStructure,
    b: &LipschitzBoxes,
    opts: &SamplingOptions,
) -> Result<LipschitzEstimate> {
    b.check_nonempty(s)?;
    let n = s.n();
    let exec = opts.execution;
    let zlo = b.z_region.lower(b.alpha);

    // θ₁: u = (x, y, z)
    let set1 = PointSet::new(3 * n, opts, 1);
    let theta1 = sup(&set1, exec, |u| {
        let x: Vec<f64> = u[..n]
            .iter()
            .map(|&t| lerp(b.omega1, b.omega2, t))
            .collect();
        let y: Vec<f64> = u[n..2 * n]
            .iter()
            .map(|&t| lerp(-b.eps0, b.eps0, t))
            .collect();
        let mut z: Vec<f64> = u[2 * n..].iter().map(|&t| lerp(zlo, b.alpha, t)).collect();
        b.feasible_z(s, &mut z);
        let (g, pm) = h_gradients(&x, &y, &z, s).map_err(|e| {
            Error::DegenerateCertificate(format!("H is undefined inside the theta1 box: {e}"))
        })?;
        Ok(g.max(pm))
    })?;

    // θ₂: u = (p, x, y, w)
    let set2 = PointSet::new(1 + 3 * n, opts, 2);
    let (plo, phi) = (1.0 / (2.0 * b.rho1), 2.0 * b.rho1);
    let (xlo, xhi) = (b.omega1 / 2.0, 2.0 * b.omega2);
    let theta2 = sup(&set2, exec, |u| {
        let p = lerp(plo, phi, u[0]);
        let x: Vec<f64> = u[1..=n].iter().map(|&t| lerp(xlo, xhi, t)).collect();
        let y: Vec<f64> = u[n + 1..=2 * n]
            .iter()
            .map(|&t| lerp(-b.eps0, b.eps0, t))
            .collect();
        let w: Vec<f64> = u[2 * n + 1..].iter().map(|&t| lerp(-1.0, 1.0, t)).collect();
        Ok(k_gradient(p, &x, &y, &w, s))
    })?;

    // θ₃: u = (p, x, y, z, w)
    let theta3 = if opts.theta3 {
        let set3 = PointSet::new(1 + 4 * n, opts, 3);
        let t3 = sup(&set3, exec, |u| {
            let p = lerp(plo, phi, u[0]);
            let x: Vec<f64> = u[1..=n].iter().map(|&t| lerp(xlo, xhi, t)).collect();
            let y: Vec<f64> = u[n + 1..=2 * n]
                .iter()
                .map(|&t| lerp(-b.omega1 / 2.0, b.omega1 / 2.0, t))
                .collect();
            let z: Vec<f64> = u[2 * n + 1..=3 * n]
                .iter()
                .map(|&t| lerp(zlo, b.alpha, t))
                .collect();
            let w: Vec<f64> = u[3 * n + 1..].iter().map(|&t| lerp(-1.0, 1.0, t)).collect();
            Ok(f_tilde_gradient(p, &x, &y, &z, &w, s))
        })?;
        Some(t3 * opts.safety)
    } else {
        None
    };

    log::debug!(
        "lipschitz sampling: {} / {} points, theta1 = {theta1:.6e}, theta2 = {theta2:.6e}",
        set1.len(),
        set2.len()
    );
    Ok(LipschitzEstimate {
        theta1: theta1 * opts.safety,
        theta2: theta2 * opts.safety,
        theta3,
    })
}

/// Largest observed ratios `|ΔH| / (θ₁ |Δy|)`, `|ΔH| / (θ₁ Σ|Δ(y_k y_l)|)` and
/// `|ΔK| / (θ₂ (|Δp| + |Δx| + |Δy|))` over random pairs; all are at most 1
/// when the estimate is sound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoundnessCheck {
    pub h_euclidean: f64,
    pub h_products: f64,
    pub k: f64,
}

pub fn check_soundness(
    s: &HomogeneousStructure,
    b: &LipschitzBoxes,
    est: &LipschitzEstimate,
    pairs: usize,
    seed: u64,
) -> Result<SoundnessCheck> {
    let n = s.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zlo = b.z_region.lower(b.alpha);
    let mut out = SoundnessCheck {
        h_euclidean: 0.0,
        h_products: 0.0,
        k: 0.0,
    };
    let draw = |lo: f64, hi: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(lo..=hi)).collect()
    };
    for _ in 0..pairs {
        let x = draw(b.omega1, b.omega2, &mut rng);
        let y = draw(-b.eps0, b.eps0, &mut rng);
        let yh = draw(-b.eps0, b.eps0, &mut rng);
        let mut z = draw(zlo, b.alpha, &mut rng);
        b.feasible_z(s, &mut z);
        let dh = (h_unchecked(&x, &y, &z, s)? - h_unchecked(&x, &yh, &z, s)?).abs();
        let dy = norm_diff(&y, &yh);
        let mut dprod = 0.0;
        for k in 0..n {
            for l in 0..n {
                dprod += (y[k] * y[l] - yh[k] * yh[l]).abs();
            }
        }
        if dy > 0.0 {
            out.h_euclidean = out.h_euclidean.max(dh / (est.theta1 * dy));
        }
        if dprod > 0.0 {
            out.h_products = out.h_products.max(dh / (est.theta1 * dprod));
        }

        let pr = (1.0 / (2.0 * b.rho1), 2.0 * b.rho1);
        let (p, ph) = (rng.random_range(pr.0..=pr.1), rng.random_range(pr.0..=pr.1));
        let x = draw(b.omega1 / 2.0, 2.0 * b.omega2, &mut rng);
        let xh = draw(b.omega1 / 2.0, 2.0 * b.omega2, &mut rng);
        let y = draw(-b.eps0, b.eps0, &mut rng);
        let yh = draw(-b.eps0, b.eps0, &mut rng);
        let w = draw(-1.0, 1.0, &mut rng);
        let dk = (k_unchecked(p, &x, &y, &w, s) - k_unchecked(ph, &xh, &yh, &w, s)).abs();
        let dist = (p - ph).abs() + norm_diff(&x, &xh) + norm_diff(&y, &yh);
        if dist > 0.0 {
            out.k = out.k.max(dk / (est.theta2 * dist));
        }
    }
    Ok(out)
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).powi(2))
        .sum::<f64>()
        .sqrt()
}
