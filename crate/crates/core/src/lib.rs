//! Invariant solutions of the prescribed Ricci curvature equation `Ric(G) = T`
//! on a cohomogeneity-one tube `[0, σ] × G/K` bounded by two principal orbits.
//!
//! Under a diagonal ansatz `G = h(r)² dr² + Σ f_k(r)² Q|p_k` the equation reduces
//! to a two-point boundary-value problem for `(f, h)`. The crate provides
//!
//! - [`structure`]: the homogeneous-space constants `β_k`, `γ_{k,l}^m`, computed
//!   by brute force from a bracket table;
//! - [`problem`]: the prescribed data (profiles `φ_i`, boundary coefficients);
//! - [`geometry`]: closed-form curvature kernels and the reduced ODE maps;
//! - [`certificates`]: explicit sufficiency constants and hypothesis checks;
//! - [`solver`]: the fixed-point (global) and shooting (local) solvers, plus an
//!   independent finite-difference verifier.
//!
//! Data-parallel sweeps run on rayon when the `parallel` feature is enabled and
//! fall back to plain iteration otherwise; see [`par::Execution`].

pub mod certificates;
pub mod error;
pub mod geometry;
pub mod par;
pub mod problem;
pub mod solver;
pub mod structure;

pub use error::{Error, Result};
pub use par::Execution;
