//! JSON run configuration.
//!
//! A configuration names the homogeneous structure (inline constants, a bracket
//! table, or one of the built-in tables), the prescribed data, envelope
//! overrides, grid and solver settings, and where results go. Command-line
//! flags override the matching fields through [`Overrides`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use ricci_tube::certificates::{CertificateOptions, IndefiniteThresholds, SamplingOptions};
use ricci_tube::problem::{
    tightest_envelope, BoundsEnvelope, Mode, OrbitData, ProblemData, SmoothProfile,
};
use ricci_tube::solver::{FixedPointOptions, DEFAULT_NODES, RECIPE_BETA_CAP};
use ricci_tube::structure::{compute_constants, tables, BracketTable, HomogeneousStructure};

use crate::error::{CliError, Result};

/// Default residual target for `|σ̄ − 1|` and the orbit defects.
pub const RESIDUAL_TARGET: f64 = 1e-6;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Checked against the data when given; `indefinite` allows sign-changing profiles.
    #[serde(default)]
    pub mode: Option<Mode>,
    pub structure: StructureSource,
    /// Problem data; only `constants` runs without it.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub phi: Vec<SmoothProfile>,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub envelope: EnvelopeConfig,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub solver: FixedPointOptions,
    #[serde(default)]
    pub sampling: SamplingOptions,
    #[serde(default = "default_target")]
    pub residual_target: f64,
    #[serde(default)]
    pub local: Option<LocalConfig>,
    /// Solution CSV read by `verify`, relative to the configuration file.
    #[serde(default)]
    pub solution: Option<PathBuf>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_grid() -> usize {
    DEFAULT_NODES
}

fn default_target() -> f64 {
    RESIDUAL_TARGET
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureSource {
    /// Constants given directly: `n`, `dims`, `beta`, `gamma[k][l][m]`.
    Inline(HomogeneousStructure),
    Table(BracketInput),
    /// `torus` (needs `n`), `su2_sphere`, `su2_full` or `su3_flag`.
    Builtin {
        name: String,
        n: Option<usize>,
    },
}

/// Lie bracket of `g` in a `Q`-orthonormal basis `e_0, …, e_{dim−1}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketInput {
    pub dim: usize,
    /// Basis indices spanning the isotropy algebra `k`.
    #[serde(default)]
    pub isotropy: Vec<usize>,
    /// Basis indices of each module `p_1, …, p_n`.
    pub modules: Vec<Vec<usize>>,
    pub brackets: Brackets,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Brackets {
    /// Full `c[i][j][s]` with `[e_i, e_j] = Σ_s c[i][j][s] e_s`.
    Dense(Vec<Vec<Vec<f64>>>),
    /// Entries `[i, j, s, c]`; the antisymmetric partner `[j, i, s, −c]` is implied.
    Sparse(Vec<(usize, usize, usize, f64)>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    /// `ρ̄`, used for abelian orbits.
    #[serde(default = "one")]
    pub rho_bar: f64,
    pub alpha: Option<f64>,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    /// Thresholds replacing `ρ₀`, `σ₀` in indefinite mode.
    #[serde(default)]
    pub thresholds: IndefiniteThresholds,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig {
            rho_bar: 1.0,
            alpha: None,
            omega1: None,
            omega2: None,
            c1: None,
            c2: None,
            thresholds: IndefiniteThresholds::default(),
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Local problem at the orbit `r = στ`: either explicit `δ` (with `a_τ`
/// defaulting to the interpolation of the ends) or a starting `β` for the
/// doubling recipe.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalConfig {
    pub tau: f64,
    #[serde(default)]
    pub a_tau: Option<Vec<f64>>,
    #[serde(default)]
    pub delta: Option<Vec<f64>>,
    #[serde(default)]
    pub beta_param: Option<f64>,
    /// Requested half-width in units of `σ`.
    #[serde(default = "one")]
    pub max_span: f64,
    #[serde(default = "beta_cap")]
    pub beta_cap: f64,
}

fn beta_cap() -> f64 {
    RECIPE_BETA_CAP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "solution_name")]
    pub solution: String,
    #[serde(default = "report_name")]
    pub report: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            solution: solution_name(),
            report: report_name(),
        }
    }
}

fn solution_name() -> String {
    "solution.csv".into()
}

fn report_name() -> String {
    "report.json".into()
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// What [`RunConfig::local_request`] resolved the local section to.
#[derive(Debug, Clone)]
pub enum LocalRequest {
    Explicit(OrbitData),
    Recipe { tau: f64, beta_param: f64 },
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|source| CliError::Config {
                path: path.to_owned(),
                source,
            })?;
        cfg.base_dir = path.parent().map(Path::to_owned).unwrap_or_default();
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dir) = &o.out {
            self.output.dir = Some(dir.clone());
        }
        if let Some(g) = o.grid {
            self.grid = g;
        }
        if let Some(s) = o.seed {
            self.sampling.seed = s;
        }
        if let Some(t) = o.tol {
            self.solver.tol = t;
        }
        if let Some(k) = o.max_iter {
            self.solver.max_iter = k;
        }
    }

    /// Path of the solution file named in the configuration.
    pub fn solution_path(&self) -> Option<PathBuf> {
        self.solution.as_ref().map(|p| self.base_dir.join(p))
    }

    /// The structure and, when built from a bracket table, the spread diagnostic.
    pub fn structure(&self) -> Result<(HomogeneousStructure, Option<f64>)> {
        match &self.structure {
            StructureSource::Inline(s) => Ok((s.clone(), None)),
            StructureSource::Table(t) => {
                let rep = compute_constants(&t.table()?)?;
                Ok((rep.structure, Some(rep.spread)))
            }
            StructureSource::Builtin { name, n } => {
                let table = match (name.as_str(), n) {
                    ("torus", Some(n)) => tables::torus(*n),
                    ("torus", None) => {
                        return Err(CliError::Invalid("builtin torus needs `n`".into()))
                    }
                    ("su2_sphere", _) => tables::su2_sphere(),
                    ("su2_full", _) => tables::su2_full(),
                    ("su3_flag", _) => tables::su3_flag(),
                    _ => {
                        return Err(CliError::Invalid(format!(
                            "unknown builtin structure `{name}`"
                        )))
                    }
                };
                let rep = compute_constants(&table)?;
                Ok((rep.structure, Some(rep.spread)))
            }
        }
    }

    pub fn problem(&self) -> Result<ProblemData> {
        let (s, _) = self.structure()?;
        let sigma = self
            .sigma
            .ok_or_else(|| CliError::Invalid("configuration has no `sigma`".into()))?;
        let indefinite = self.mode == Some(Mode::Indefinite);
        let p = ProblemData::new(
            s,
            sigma,
            self.phi.clone(),
            self.a.clone(),
            self.b.clone(),
            indefinite,
        )?;
        if let Some(m) = self.mode {
            let implied = Mode::of(&p);
            if implied != m {
                return Err(CliError::Invalid(format!(
                    "mode {m:?} does not match the data, which implies {implied:?}"
                )));
            }
        }
        Ok(p)
    }

    /// Tightest envelope of the data with the configured overrides applied.
    pub fn envelope(&self, p: &ProblemData) -> Result<BoundsEnvelope> {
        let e = &self.envelope;
        let mut env = tightest_envelope(p, e.rho_bar)?;
        let fields = [
            (e.alpha, &mut env.alpha),
            (e.omega1, &mut env.omega1),
            (e.omega2, &mut env.omega2),
            (e.c1, &mut env.c1),
            (e.c2, &mut env.c2),
        ];
        for (given, slot) in fields {
            if let Some(v) = given {
                *slot = v;
            }
        }
        env.validate()?;
        Ok(env)
    }

    pub fn certificate_options(&self) -> CertificateOptions {
        CertificateOptions {
            sampling: self.sampling,
            thresholds: self.envelope.thresholds,
            ..CertificateOptions::default()
        }
    }

    pub fn local_request(&self, p: &ProblemData) -> Result<(LocalRequest, &LocalConfig)> {
        let l = self
            .local
            .as_ref()
            .ok_or_else(|| CliError::Invalid("configuration has no `local` section".into()))?;
        let req = match (&l.delta, l.beta_param) {
            (Some(delta), None) => {
                let a_tau = match &l.a_tau {
                    Some(a) => a.clone(),
                    None => {
                        p.a.iter()
                            .zip(&p.b)
                            .map(|(a, b)| (1.0 - l.tau) * a + l.tau * b)
                            .collect()
                    }
                };
                LocalRequest::Explicit(OrbitData::new(l.tau, a_tau, delta.clone())?)
            }
            (None, Some(beta_param)) => {
                if l.a_tau.is_some() {
                    return Err(CliError::Invalid(
                        "the recipe derives `a_tau`; remove it or give `delta`".into(),
                    ));
                }
                LocalRequest::Recipe {
                    tau: l.tau,
                    beta_param,
                }
            }
            _ => {
                return Err(CliError::Invalid(
                    "`local` needs exactly one of `delta` and `beta_param`".into(),
                ))
            }
        };
        Ok((req, l))
    }
}

impl BracketInput {
    pub fn table(&self) -> Result<BracketTable> {
        let d = self.dim;
        let mut t = BracketTable::zeros(d);
        let bad = |i: usize| i >= d;
        match &self.brackets {
            Brackets::Dense(c) => {
                if c.len() != d
                    || c.iter()
                        .any(|row| row.len() != d || row.iter().any(|v| v.len() != d))
                {
                    return Err(CliError::Invalid(format!(
                        "dense brackets must be {d}x{d}x{d}"
                    )));
                }
                t.brackets = c.iter().flatten().flatten().copied().collect();
            }
            Brackets::Sparse(entries) => {
                for &(i, j, s, v) in entries {
                    if bad(i) || bad(j) || bad(s) {
                        return Err(CliError::Invalid(format!(
                            "bracket entry ({i}, {j}, {s}) out of range"
                        )));
                    }
                    t.set_bracket(i, j, s, v);
                }
            }
        }
        if let Some(&i) = self.isotropy.iter().find(|&&i| bad(i)) {
            return Err(CliError::Invalid(format!(
                "isotropy index {i} out of range"
            )));
        }
        t.k_indices = self.isotropy.clone();
        let mut assignment = BTreeMap::new();
        for (k, module) in self.modules.iter().enumerate() {
            for &i in module {
                if bad(i) {
                    return Err(CliError::Invalid(format!("module index {i} out of range")));
                }
                if assignment.insert(i, k + 1).is_some() {
                    return Err(CliError::Invalid(format!(
                        "basis vector {i} assigned twice"
                    )));
                }
            }
        }
        t.module_assignment = assignment;
        Ok(t)
    }
}
