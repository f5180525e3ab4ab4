//! Homogeneous-space data of the principal orbit `G/K`.
//!
//! A [`HomogeneousStructure`] carries the module dimensions `d_k` and the
//! constant arrays `β_k` (Killing form on `p_k` is `−β_k Q`) and `γ_{k,l}^m`
//! (squared `p_m`-components of brackets of `p_k` with an orthonormal basis
//! of `p_l`). They can be supplied directly or computed from a
//! [`BracketTable`] by brute force.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for exact algebraic identities of a bracket table.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for averaged constants (spread across basis vectors).
pub const SPREAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StructureRepr", into = "StructureRepr")]
pub struct HomogeneousStructure {
    dims: Vec<usize>,
    beta: Vec<f64>,
    /// Flattened `γ_{k,l}^m` at `(k * n + l) * n + m`.
    gamma: Vec<f64>,
    abelian: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StructureRepr {
    n: usize,
    dims: Vec<usize>,
    beta: Vec<f64>,
    gamma: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    abelian: bool,
}

impl TryFrom<StructureRepr> for HomogeneousStructure {
    type Error = Error;

    fn try_from(r: StructureRepr) -> Result<Self> {
        let n = r.n;
        if r.gamma.len() != n
            || r.gamma
                .iter()
                .any(|g| g.len() != n || g.iter().any(|h| h.len() != n))
        {
            return Err(Error::InvalidStructure(format!(
                "gamma must be {n}x{n}x{n}"
            )));
        }
        let gamma = r.gamma.into_iter().flatten().flatten().collect();
        HomogeneousStructure::new(r.dims, r.beta, gamma, r.abelian)
    }
}

impl From<HomogeneousStructure> for StructureRepr {
    fn from(s: HomogeneousStructure) -> Self {
        let n = s.n();
        let gamma = (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| (0..n).map(|m| s.gamma(k, l, m)).collect())
                    .collect()
            })
            .collect();
        StructureRepr {
            n,
            dims: s.dims,
            beta: s.beta,
            gamma,
            abelian: s.abelian,
        }
    }
}

impl HomogeneousStructure {
    /// Builds and validates a structure; `gamma` is flattened row-major `[k][l][m]`.
    pub fn new(dims: Vec<usize>, beta: Vec<f64>, gamma: Vec<f64>, abelian: bool) -> Result<Self> {
        let n = dims.len();
        if beta.len() != n {
            return Err(Error::InvalidStructure(format!(
                "beta has length {} but there are {n} modules",
                beta.len()
            )));
        }
        if gamma.len() != n * n * n {
            return Err(Error::InvalidStructure(format!(
                "gamma has {} entries, expected {}",
                gamma.len(),
                n * n * n
            )));
        }
        validate_structure(HomogeneousStructure {
            dims,
            beta,
            gamma,
            abelian,
        })
    }

    /// Flat torus-type structure: `n` one-dimensional modules, all constants zero.
    pub fn abelian(n: usize) -> Result<Self> {
        Self::new(vec![1; n], vec![0.0; n], vec![0.0; n * n * n], true)
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, k: usize) -> f64 {
        self.dims[k] as f64
    }

    /// Dimension of the tube, `1 + Σ d_k`.
    pub fn manifold_dim(&self) -> usize {
        1 + self.dims.iter().sum::<usize>()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    #[inline]
    pub fn gamma(&self, k: usize, l: usize, m: usize) -> f64 {
        let n = self.n();
        self.gamma[(k * n + l) * n + m]
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian
    }

    /// `true` when every `β` and `γ` vanishes.
    pub fn constants_vanish(&self) -> bool {
        self.beta.iter().chain(self.gamma.iter()).all(|&c| c == 0.0)
    }
}

pub fn validate_structure(s: HomogeneousStructure) -> Result<HomogeneousStructure> {
    let n = s.n();
    if n == 0 {
        return Err(Error::InvalidStructure(
            "at least one module is required".into(),
        ));
    }
    if let Some(k) = s.dims.iter().position(|&d| d == 0) {
        return Err(Error::InvalidStructure(format!(
            "module {} has dimension 0",
            k + 1
        )));
    }
    if s.manifold_dim() < 3 {
        return Err(Error::InvalidStructure(format!(
            "manifold dimension {} is below 3",
            s.manifold_dim()
        )));
    }
    if let Some(k) = s.beta.iter().position(|b| !b.is_finite() || *b < 0.0) {
        return Err(Error::InvalidStructure(format!(
            "beta_{} = {} is not a nonnegative number",
            k + 1,
            s.beta[k]
        )));
    }
    if let Some(i) = s.gamma.iter().position(|g| !g.is_finite() || *g < 0.0) {
        let (k, l, m) = (i / (n * n), (i / n) % n, i % n);
        return Err(Error::InvalidStructure(format!(
            "gamma_{{{},{}}}^{} = {} is not a nonnegative number",
            k + 1,
            l + 1,
            m + 1,
            s.gamma[i]
        )));
    }
    if s.abelian {
        if !s.constants_vanish() {
            return Err(Error::InvalidStructure(
                "abelian structure must have all beta and gamma equal to 0".into(),
            ));
        }
    } else if s.beta.iter().all(|&b| b <= 0.0) {
        return Err(Error::InvalidStructure(
            "non-abelian structure needs at least one strictly positive beta".into(),
        ));
    }
    Ok(s)
}

/// Structure constants `[e_i, e_j] = Σ_s c_{ij}^s e_s` of a Lie algebra in a
/// `Q`-orthonormal basis, together with the isotropy subalgebra and the
/// assignment of the remaining basis vectors to modules `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketTable {
    pub dim_g: usize,
    /// Flattened `c_{ij}^s` at `(i * dim_g + j) * dim_g + s`.
    pub brackets: Vec<f64>,
    pub k_indices: Vec<usize>,
    pub module_assignment: BTreeMap<usize, usize>,
}

/// Output of [`compute_constants`]: the structure plus the consistency diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub structure: HomogeneousStructure,
    /// Largest deviation between the per-basis-vector values and their average.
    pub spread: f64,
}

impl BracketTable {
    pub fn zeros(dim_g: usize) -> Self {
        BracketTable {
            dim_g,
            brackets: vec![0.0; dim_g * dim_g * dim_g],
            k_indices: Vec::new(),
            module_assignment: BTreeMap::new(),
        }
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, s: usize) -> f64 {
        self.brackets[(i * self.dim_g + j) * self.dim_g + s]
    }

    /// Sets `[e_i, e_j] ∋ value · e_s` and the antisymmetric partner.
    pub fn set_bracket(&mut self, i: usize, j: usize, s: usize, value: f64) {
        let d = self.dim_g;
        self.brackets[(i * d + j) * d + s] = value;
        self.brackets[(j * d + i) * d + s] = -value;
    }

    /// Number of modules and the basis indices belonging to each (0-based modules).
    pub fn modules(&self) -> Result<Vec<Vec<usize>>> {
        let n = self.module_assignment.values().copied().max().unwrap_or(0);
        let mut out = vec![Vec::new(); n];
        for (&i, &label) in &self.module_assignment {
            if label == 0 {
                return Err(Error::InvalidStructure("module labels start at 1".into()));
            }
            out[label - 1].push(i);
        }
        if let Some(k) = out.iter().position(Vec::is_empty) {
            return Err(Error::InvalidStructure(format!(
                "module {} has no basis vectors",
                k + 1
            )));
        }
        Ok(out)
    }

    /// Checks antisymmetry, Jacobi, `Q`-invariance, closure of `k`, and that the
    /// module assignment partitions the complement of `k`.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim_g;
        if d == 0 {
            return Err(Error::InvalidStructure("empty Lie algebra".into()));
        }
        if self.brackets.len() != d * d * d {
            return Err(Error::InvalidStructure(format!(
                "bracket table has {} entries, expected {}",
                self.brackets.len(),
                d * d * d
            )));
        }
        if self.brackets.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidStructure(
                "bracket table has non-finite entries".into(),
            ));
        }
        for i in 0..d {
            for j in 0..d {
                for s in 0..d {
                    let asym = self.c(i, j, s) + self.c(j, i, s);
                    if asym.abs() > IDENTITY_TOL {
                        return Err(Error::InvalidStructure(format!(
                            "antisymmetry fails for ({i},{j},{s}): defect {asym:.3e}"
                        )));
                    }
                    // Q([e_i, e_j], e_s) + Q(e_j, [e_i, e_s]) = 0
                    let inv = self.c(i, j, s) + self.c(i, s, j);
                    if inv.abs() > IDENTITY_TOL {
                        return Err(Error::InvalidStructure(format!(
                            "Q-invariance fails for ({i},{j},{s}): defect {inv:.3e}"
                        )));
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for t in 0..d {
                        let mut jac = 0.0;
                        for s in 0..d {
                            jac += self.c(j, k, s) * self.c(i, s, t)
                                + self.c(k, i, s) * self.c(j, s, t)
                                + self.c(i, j, s) * self.c(k, s, t);
                        }
                        if jac.abs() > IDENTITY_TOL {
                            return Err(Error::InvalidStructure(format!(
                                "Jacobi identity fails for ({i},{j},{k}) component {t}: defect {jac:.3e}"
                            )));
                        }
                    }
                }
            }
        }
        let mut seen = vec![false; d];
        for &i in &self.k_indices {
            if i >= d || seen[i] {
                return Err(Error::InvalidStructure(format!("bad isotropy index {i}")));
            }
            seen[i] = true;
        }
        for &i in &self.k_indices {
            for &j in &self.k_indices {
                for s in (0..d).filter(|s| !seen[*s]) {
                    if self.c(i, j, s).abs() > IDENTITY_TOL {
                        return Err(Error::InvalidStructure(format!(
                            "isotropy algebra not closed: [e_{i}, e_{j}] has component on e_{s}"
                        )));
                    }
                }
            }
        }
        for &i in self.module_assignment.keys() {
            if i >= d || seen[i] {
                return Err(Error::InvalidStructure(format!(
                    "basis index {i} is out of range or already in the isotropy algebra"
                )));
            }
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidStructure(format!(
                "basis index {i} is neither in the isotropy algebra nor assigned to a module"
            )));
        }
        self.modules().map(|_| ())
    }

    /// Killing form `K(e_i, e_j) = tr(ad e_i ∘ ad e_j)`.
    pub fn killing(&self, i: usize, j: usize) -> f64 {
        let d = self.dim_g;
        let mut acc = 0.0;
        for s in 0..d {
            for t in 0..d {
                // (ad e_i)_{t s} = c_{i s}^t
                acc += self.c(i, s, t) * self.c(j, t, s);
            }
        }
        acc
    }
}

/// Brute-force evaluation of `β_k` and `γ_{k,l}^m` from a bracket table.
///
/// Both constants are read off quadratic forms on `p_k`; the full forms
/// (diagonal and off-diagonal entries in the adapted basis) are compared
/// against `constant · Q` and the largest deviation is reported as `spread`.
pub fn compute_constants(b: &BracketTable) -> Result<ConstantsReport> {
    b.validate()?;
    let modules = b.modules()?;
    let n = modules.len();
    let mut spread = 0.0_f64;

    let mut beta = vec![0.0; n];
    for (k, basis) in modules.iter().enumerate() {
        let diag: Vec<f64> = basis.iter().map(|&i| -b.killing(i, i)).collect();
        let avg = diag.iter().sum::<f64>() / diag.len() as f64;
        for (a, &i) in basis.iter().enumerate() {
            spread = spread.max((diag[a] - avg).abs());
            for &j in basis.iter().filter(|&&j| j != i) {
                spread = spread.max(b.killing(i, j).abs());
            }
        }
        beta[k] = avg;
    }

    let mut gamma = vec![0.0; n * n * n];
    for (k, pk) in modules.iter().enumerate() {
        for (l, pl) in modules.iter().enumerate() {
            for (m, pm) in modules.iter().enumerate() {
                // B(X, Y) = Σ_{e_j ∈ p_l} Q(pr_m [X, e_j], pr_m [Y, e_j])
                let form = |x: usize, y: usize| -> f64 {
                    pl.iter()
                        .map(|&j| pm.iter().map(|&s| b.c(x, j, s) * b.c(y, j, s)).sum::<f64>())
                        .sum()
                };
                let diag: Vec<f64> = pk.iter().map(|&x| form(x, x)).collect();
                let avg = diag.iter().sum::<f64>() / diag.len() as f64;
                for (a, &x) in pk.iter().enumerate() {
                    spread = spread.max((diag[a] - avg).abs());
                    for &y in pk.iter().filter(|&&y| y != x) {
                        spread = spread.max(form(x, y).abs());
                    }
                }
                gamma[(k * n + l) * n + m] = avg;
            }
        }
    }
    if spread > SPREAD_TOL {
        return Err(Error::NotIsotypic {
            spread,
            tolerance: SPREAD_TOL,
        });
    }

    // sums of squares and a negative semidefinite Killing form: clip roundoff
    let clip = |v: f64| if v < 0.0 && v > -1e-14 { 0.0 } else { v };
    let beta: Vec<f64> = beta.into_iter().map(clip).collect();
    let gamma: Vec<f64> = gamma.into_iter().map(clip).collect();
    let abelian = beta.iter().chain(gamma.iter()).all(|&c| c == 0.0);
    let dims = modules.iter().map(Vec::len).collect();
    let structure = HomogeneousStructure::new(dims, beta, gamma, abelian)?;
    Ok(ConstantsReport { structure, spread })
}

/// Tables used across tests, examples and the shipped configurations.
pub mod tables {
    use super::*;

    /// Abelian algebra of dimension `n`, every basis vector its own module.
    pub fn torus(n: usize) -> BracketTable {
        let mut t = BracketTable::zeros(n);
        t.module_assignment = (0..n).map(|i| (i, i + 1)).collect();
        t
    }

    /// `su(2)` with `[X1,X2]=X3`, `[X2,X3]=X1`, `[X3,X1]=X2`; isotropy `X3`,
    /// one two-dimensional module `{X1, X2}` (the round 2-sphere orbit).
    pub fn su2_sphere() -> BracketTable {
        let mut t = su2();
        t.k_indices = vec![2];
        t.module_assignment = [(0, 1), (1, 1)].into_iter().collect();
        t
    }

    /// `su(2)` with trivial isotropy and three one-dimensional modules.
    pub fn su2_full() -> BracketTable {
        let mut t = su2();
        t.module_assignment = [(0, 1), (1, 2), (2, 3)].into_iter().collect();
        t
    }

    fn su2() -> BracketTable {
        let mut t = BracketTable::zeros(3);
        t.set_bracket(0, 1, 2, 1.0);
        t.set_bracket(1, 2, 0, 1.0);
        t.set_bracket(2, 0, 1, 1.0);
        t
    }

    /// `su(3)` in the basis `X_a = i λ_a / 2` (Gell-Mann), orthonormal for
    /// `Q(X, Y) = −2 tr(XY)`, so that `c_{ab}^c = −f_{abc}`. The isotropy is the
    /// maximal torus `{X3, X8}` and the modules are the three root planes: the
    /// full flag manifold `SU(3)/T²`.
    pub fn su3_flag() -> BracketTable {
        let h = 0.5;
        let r = 3.0_f64.sqrt() / 2.0;
        let f: [(usize, usize, usize, f64); 9] = [
            (1, 2, 3, 1.0),
            (1, 4, 7, h),
            (1, 5, 6, -h),
            (2, 4, 6, h),
            (2, 5, 7, h),
            (3, 4, 5, h),
            (3, 6, 7, -h),
            (4, 5, 8, r),
            (6, 7, 8, r),
        ];
        let mut t = BracketTable::zeros(8);
        for (a, b, c, v) in f {
            let (a, b, c) = (a - 1, b - 1, c - 1);
            // totally antisymmetric f_{abc}; c_{ab}^c = -f_{abc}
            for (x, y, z, sign) in [(a, b, c, 1.0), (b, c, a, 1.0), (c, a, b, 1.0)] {
                t.set_bracket(x, y, z, -sign * v);
            }
        }
        t.k_indices = vec![2, 7];
        t.module_assignment = [(0, 1), (1, 1), (3, 2), (4, 2), (5, 3), (6, 3)]
            .into_iter()
            .collect();
        t
    }
}
