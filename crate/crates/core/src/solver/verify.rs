use serde::{Deserialize, Serialize};

use super::quadrature::{column, derivative};
use super::MetricSolution;
use crate::error::{Error, Result};
use crate::geometry::{bianchi_residual, h1_unchecked, h2_unchecked, ricci_components, MetricJet};
use crate::par::{self, Execution};
use crate::problem::{profiles_on_r, ProblemData};

/// Floor added to the orbit and Bianchi defects in the σ̄-propagation check.
const QUADRATURE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    /// Also verify the stride-2 subsample and report the error ratio.
    pub convergence: bool,
    pub execution: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            convergence: true,
            execution: Execution::default(),
        }
    }
}

/// Residuals of a metric against the prescribed curvature, all recomputed from
/// the stored `f`, `f′`, `h` by finite differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub nodes: usize,
    /// `max |σ̄ − 1|`.
    pub sigma_bar_defect: f64,
    /// `max_i max |orbit_i − φ_i|`.
    pub orbit_defect: f64,
    pub bianchi_defect: f64,
    /// `|f(0) − a|`, present when the solution starts at `r = 0`.
    pub boundary_error_a: Option<f64>,
    /// `|f(σ) − b|`, present when the solution ends at `r = σ`.
    pub boundary_error_b: Option<f64>,
    /// `|H₁(f(0), f′(0)) − h(0)² H₂(f(0), φ(0))|`.
    pub head_defect: Option<f64>,
    /// Defect on every other node divided by the full defect; about 16 for a
    /// smooth solution above roundoff. Needs an odd node count.
    pub convergence_ratio: Option<f64>,
    /// `σ̄` defect within `10 (orbit + Bianchi + 1e−9)`.
    pub sigma_bar_propagation: bool,
}

impl ResidualReport {
    /// Both curvature defects at most `tol`.
    pub fn meets(&self, tol: f64) -> bool {
        self.sigma_bar_defect <= tol && self.orbit_defect <= tol
    }

    pub fn worst(&self) -> f64 {
        self.sigma_bar_defect.max(self.orbit_defect)
    }
}

pub fn verify(sol: &MetricSolution, p: &ProblemData) -> Result<ResidualReport> {
    verify_with(sol, p, &VerifyOptions::default())
}

pub fn verify_with(
    sol: &MetricSolution,
    p: &ProblemData,
    opts: &VerifyOptions,
) -> Result<ResidualReport> {
    sol.validate()?;
    let s = &p.structure;
    let n = s.n();
    if sol.n != n {
        return Err(Error::DomainError(format!(
            "solution has {} modules, structure has {n}",
            sol.n
        )));
    }
    let m = sol.nodes();
    let (sigma_bar_defect, orbit_defect, bianchi_defect) =
        curvature_defects(sol, p, opts.execution)?;

    let edge = 1e-12 * p.sigma;
    let sup_diff = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max)
    };
    let starts = sol.r[0].abs() <= edge;
    let ends = (sol.r[m - 1] - p.sigma).abs() <= edge;
    let boundary_error_a = starts.then(|| sup_diff(sol.f_at(0), &p.a));
    let boundary_error_b = ends.then(|| sup_diff(sol.f_at(m - 1), &p.b));
    let head_defect = if starts {
        let phi0 = profiles_on_r(p).phi(0.0)?;
        let (x, y) = (sol.f_at(0), sol.fp_at(0));
        Some((h1_unchecked(x, y, s) - sol.h[0] * sol.h[0] * h2_unchecked(x, &phi0, s)).abs())
    } else {
        None
    };

    let convergence_ratio = if opts.convergence && m % 2 == 1 && m >= 9 {
        let coarse = subsample(sol);
        let (sb, orb, _) = curvature_defects(&coarse, p, opts.execution)?;
        Some(sb.max(orb) / sigma_bar_defect.max(orbit_defect))
    } else {
        None
    };

    Ok(ResidualReport {
        nodes: m,
        sigma_bar_defect,
        orbit_defect,
        bianchi_defect,
        boundary_error_a,
        boundary_error_b,
        head_defect,
        convergence_ratio,
        sigma_bar_propagation: sigma_bar_defect
            <= 10.0 * (orbit_defect + bianchi_defect + QUADRATURE_FLOOR),
    })
}

fn subsample(sol: &MetricSolution) -> MetricSolution {
    let n = sol.n;
    let keep: Vec<usize> = (0..sol.nodes()).step_by(2).collect();
    let rows = |v: &[f64]| {
        keep.iter()
            .flat_map(|&j| v[j * n..(j + 1) * n].iter().copied())
            .collect()
    };
    MetricSolution {
        n,
        r: keep.iter().map(|&j| sol.r[j]).collect(),
        f: rows(&sol.f),
        fp: rows(&sol.fp),
        h: keep.iter().map(|&j| sol.h[j]).collect(),
        hp: keep.iter().map(|&j| sol.hp[j]).collect(),
        provenance: sol.provenance.clone(),
    }
}

/// `(max |σ̄ − 1|, max |orbit − φ|, max |Bianchi|)` with `f″`, `h′` and `σ̄′`
/// from fourth-order differences.
fn curvature_defects(
    sol: &MetricSolution,
    p: &ProblemData,
    exec: Execution,
) -> Result<(f64, f64, f64)> {
    let s = &p.structure;
    let n = sol.n;
    let m = sol.nodes();
    if m < 5 {
        return Err(Error::DomainError(format!(
            "verification needs at least 5 nodes, got {m}"
        )));
    }
    let dr = (sol.r[m - 1] - sol.r[0]) / (m - 1) as f64;
    let uniform = sol
        .r
        .iter()
        .enumerate()
        .all(|(j, r)| (r - (sol.r[0] + j as f64 * dr)).abs() <= 1e-9 * dr);
    if !(dr > 0.0) || !uniform {
        return Err(Error::DomainError(
            "verification needs uniformly spaced nodes".into(),
        ));
    }

    let mut fpp = vec![0.0; n * m];
    for i in 0..n {
        for (j, v) in derivative(&column(&sol.fp, n, i), dr)
            .into_iter()
            .enumerate()
        {
            fpp[j * n + i] = v;
        }
    }
    let hp = derivative(&sol.h, dr);
    let prof = profiles_on_r(p);
    let jet = |j: usize| MetricJet {
        h: sol.h[j],
        hp: hp[j],
        f: sol.f_at(j).to_vec(),
        fp: sol.fp_at(j).to_vec(),
        fpp: fpp[j * n..(j + 1) * n].to_vec(),
    };

    let pointwise = par::try_map_indexed(exec, m, |j| {
        let rc = ricci_components(&jet(j), s)?;
        let phi = prof.phi(sol.r[j])?;
        let orbit = rc
            .orbit
            .iter()
            .zip(&phi)
            .map(|(o, f)| (o - f).abs())
            .fold(0.0, f64::max);
        Ok::<_, Error>((rc.sigma_bar, orbit))
    })?;
    let sigma_bar: Vec<f64> = pointwise.iter().map(|x| x.0).collect();
    let sigma_bar_p = derivative(&sigma_bar, dr);
    let bianchi = par::try_map_indexed(exec, m, |j| {
        let r = sol.r[j];
        bianchi_residual(
            &jet(j),
            sigma_bar[j],
            sigma_bar_p[j],
            &prof.phi(r)?,
            &prof.phi_p(r)?,
            s,
        )
        .map(f64::abs)
    })?;

    let sup = |v: &mut dyn Iterator<Item = f64>| {
        v.fold(0.0, |a: f64, b| {
            if a.is_nan() || b.is_nan() {
                f64::NAN
            } else {
                a.max(b)
            }
        })
    };
    Ok((
        sup(&mut sigma_bar.iter().map(|x| (x - 1.0).abs())),
        sup(&mut pointwise.iter().map(|x| x.1)),
        sup(&mut bianchi.into_iter()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::SmoothProfile;
    use crate::solver::{Grid, Provenance};
    use crate::structure::HomogeneousStructure;

    fn build(
        n: usize,
        r: Vec<f64>,
        f: impl Fn(f64) -> (Vec<f64>, Vec<f64>),
        h: impl Fn(f64) -> (f64, f64),
    ) -> MetricSolution {
        let mut sol = MetricSolution {
            n,
            r: r.clone(),
            f: vec![],
            fp: vec![],
            h: vec![],
            hp: vec![],
            provenance: Provenance::External,
        };
        for &x in &r {
            let (a, b) = f(x);
            sol.f.extend(a);
            sol.fp.extend(b);
            let (c, d) = h(x);
            sol.h.push(c);
            sol.hp.push(d);
        }
        sol
    }

    #[test]
    fn flat_torus_is_exact() {
        let s = HomogeneousStructure::abelian(2).unwrap();
        let p = ProblemData::new(
            s,
            0.5,
            vec![SmoothProfile::Constant(0.0); 2],
            vec![1.0; 2],
            vec![1.0; 2],
            true,
        )
        .unwrap();
        let g = Grid::new(21, 0.5).unwrap();
        let sol = build(
            2,
            g.nodes(),
            |_| (vec![1.0; 2], vec![0.0; 2]),
            |_| (1.0, 0.0),
        );
        let rep = verify(&sol, &p).unwrap();
        // σ̄ = 0 here, so only the orbit and Bianchi parts are exact
        assert!(rep.orbit_defect <= 1e-12 && rep.bianchi_defect <= 1e-12);
        assert_eq!(rep.sigma_bar_defect, 1.0);
        assert_eq!(rep.boundary_error_a, Some(0.0));
        assert_eq!(rep.boundary_error_b, Some(0.0));
    }

    /// Taylor coefficients in `t` of `1 − cos(c + w t)`.
    fn one_minus_cos(c: f64, w: f64, degree: usize) -> Vec<f64> {
        let mut out = vec![1.0 - c.cos()];
        let mut scale = 1.0;
        for k in 1..=degree {
            scale *= w / k as f64;
            out.push(-(c + k as f64 * std::f64::consts::FRAC_PI_2).cos() * scale);
        }
        out
    }

    #[test]
    fn round_three_sphere_band() {
        // unit S³ as dr² + sin²(r) g_{S²} has Ric = 2g; with r = ρ/√2 the
        // dρ⊗dρ coefficient is 1, h = 1/√2 and the orbit coefficient 2 sin²
        let s = HomogeneousStructure::new(vec![2], vec![2.0], vec![0.0], false).unwrap();
        let (c, sigma) = (0.4, 0.3);
        let w = std::f64::consts::SQRT_2;
        let f = |rho: f64| (c + rho / w).sin();
        let p = ProblemData::new(
            s,
            sigma,
            vec![SmoothProfile::Polynomial(one_minus_cos(
                2.0 * c,
                w * sigma,
                30,
            ))],
            vec![f(0.0)],
            vec![f(sigma)],
            false,
        )
        .unwrap();
        let g = Grid::new(81, sigma).unwrap();
        let sol = build(
            1,
            g.nodes(),
            |rho| (vec![f(rho)], vec![(c + rho / w).cos() / w]),
            |_| (1.0 / w, 0.0),
        );
        let rep = verify(&sol, &p).unwrap();
        assert!(
            rep.sigma_bar_defect < 1e-9 && rep.orbit_defect < 1e-9,
            "{rep:?}"
        );
        assert!(rep.boundary_error_a.unwrap() < 1e-16 && rep.boundary_error_b.unwrap() < 1e-16);
        assert!(rep.head_defect.unwrap() < 1e-13);
        let ratio = rep.convergence_ratio.unwrap();
        assert!(ratio > 10.0 && ratio < 20.0, "{ratio}");
        assert!(rep.sigma_bar_propagation);
    }

    #[test]
    fn too_few_nodes() {
        let s = HomogeneousStructure::abelian(2).unwrap();
        let p = ProblemData::new(
            s,
            1.0,
            vec![SmoothProfile::Constant(1.0); 2],
            vec![1.0; 2],
            vec![1.0; 2],
            false,
        )
        .unwrap();
        let sol = build(
            2,
            vec![0.0, 0.5, 1.0],
            |_| (vec![1.0; 2], vec![0.0; 2]),
            |_| (1.0, 0.0),
        );
        assert!(matches!(verify(&sol, &p), Err(Error::DomainError(_))));
    }
}
