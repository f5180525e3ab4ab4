//! Global fixed-point solver, local shooting solver, and the independent
//! finite-difference verifier.
//!
//! Node-major layout is used throughout: the value of module `i` at node `j`
//! sits at index `j * n + i`.

mod background;
mod fixed_point;
mod local;
pub mod ode;
pub mod quadrature;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use background::{background, Background};
pub use fixed_point::{apply_c, fixed_point_solve, hartman_ratios, FixedPointOptions};
pub use local::{local_shoot, theorem_recipe, RecipeOptions, RECIPE_BETA_CAP};
pub use verify::{verify, verify_with, ResidualReport, VerifyOptions};

/// Default number of grid nodes.
pub const DEFAULT_NODES: usize = 2001;

/// Uniform grid `r_j = j σ / (N − 1)` on `[0, σ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: usize,
    sigma: f64,
}

impl Grid {
    pub fn new(nodes: usize, sigma: f64) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::InvalidProblem(format!(
                "grid needs at least 3 nodes, got {nodes}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "grid length {sigma} must be positive"
            )));
        }
        Ok(Grid { nodes, sigma })
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn step(&self) -> f64 {
        self.sigma / (self.nodes - 1) as f64
    }

    /// Node `j`; the last node is exactly `σ`.
    pub fn r(&self, j: usize) -> f64 {
        if j + 1 == self.nodes {
            self.sigma
        } else {
            j as f64 * self.sigma / (self.nodes - 1) as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nodes).map(|j| self.r(j)).collect()
    }
}

/// A discretized pair `(υ₁, υ₂)` with the derivative channel of `υ₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPair {
    pub n: usize,
    pub mu: Vec<f64>,
    pub mu_p: Vec<f64>,
    pub nu: Vec<f64>,
}

impl PathPair {
    pub fn zeros(n: usize, nodes: usize) -> Self {
        PathPair {
            n,
            mu: vec![0.0; n * nodes],
            mu_p: vec![0.0; n * nodes],
            nu: vec![0.0; nodes],
        }
    }

    pub fn nodes(&self) -> usize {
        self.nu.len()
    }

    /// `sup|υ₁| + σ sup|υ₁′| + sup|υ₂|`, Euclidean in the module index.
    pub fn b_norm(&self, sigma: f64) -> f64 {
        let n = self.n;
        let sup_vec = |v: &[f64]| {
            v.chunks_exact(n)
                .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
                .fold(0.0, f64::max)
        };
        let sup_nu = self.nu.iter().map(|x| x.abs()).fold(0.0, f64::max);
        sup_vec(&self.mu) + sigma * sup_vec(&self.mu_p) + sup_nu
    }

    /// `self − other`.
    pub fn diff(&self, other: &PathPair) -> PathPair {
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        PathPair {
            n: self.n,
            mu: sub(&self.mu, &other.mu),
            mu_p: sub(&self.mu_p, &other.mu_p),
            nu: sub(&self.nu, &other.nu),
        }
    }

    /// `(1 − λ) self + λ other`.
    pub fn blend(&self, other: &PathPair, lambda: f64) -> PathPair {
        let mix = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (1.0 - lambda) * x + lambda * y)
                .collect()
        };
        PathPair {
            n: self.n,
            mu: mix(&self.mu, &other.mu),
            mu_p: mix(&self.mu_p, &other.mu_p),
            nu: mix(&self.nu, &other.nu),
        }
    }
}

/// How a solution was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    GlobalFixedPoint {
        iterations: usize,
        damping: f64,
        final_delta: f64,
        /// Largest `|ξ| / (σ²Θ/8)` and `|ξ′| / (σΘ/2)` seen over all iterates.
        hartman_max: f64,
        /// `B`-norm of `(u, v)` and the ball radius `L`; `None` when uncertified.
        ball_norm: f64,
        ball_radius: Option<f64>,
    },
    LocalShoot {
        tau: f64,
        kappa: f64,
        h_at_tau: f64,
        lhs: f64,
    },
    /// Loaded from a file or built analytically.
    External,
}

/// Metric functions on uniformly spaced nodes `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSolution {
    pub n: usize,
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub h: Vec<f64>,
    pub hp: Vec<f64>,
    pub provenance: Provenance,
}

impl MetricSolution {
    pub fn nodes(&self) -> usize {
        self.r.len()
    }

    pub fn f_at(&self, j: usize) -> &[f64] {
        &self.f[j * self.n..(j + 1) * self.n]
    }

    pub fn fp_at(&self, j: usize) -> &[f64] {
        &self.fp[j * self.n..(j + 1) * self.n]
    }

    /// Checks shapes, finiteness and positivity of `f` and `h`.
    pub fn validate(&self) -> Result<()> {
        let m = self.r.len();
        if self.n == 0
            || self.f.len() != m * self.n
            || self.fp.len() != m * self.n
            || self.h.len() != m
            || self.hp.len() != m
        {
            return Err(Error::InvalidProblem(
                "solution arrays have inconsistent shapes".into(),
            ));
        }
        let all = self
            .r
            .iter()
            .chain(&self.f)
            .chain(&self.fp)
            .chain(&self.h)
            .chain(&self.hp);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(
                "solution has non-finite entries".into(),
            ));
        }
        if let Some(j) = self.h.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositive(format!(
                "h = {} at r = {}",
                self.h[j], self.r[j]
            )));
        }
        if let Some(k) = self.f.iter().position(|&v| v <= 0.0) {
            let j = k / self.n;
            return Err(Error::NonPositive(format!(
                "f_{} = {} at r = {}",
                k % self.n + 1,
                self.f[k],
                self.r[j]
            )));
        }
        Ok(())
    }
}
