use serde::{Deserialize, Serialize};

use super::ode::rk4_step;
use super::Grid;
use crate::error::{Error, Result};
use crate::geometry::{h_unchecked, k_unchecked};
use crate::problem::{profiles_on_r, ProblemData};

/// Substeps of the classical integrator per grid interval.
const SUBSTEPS: usize = 4;

/// The background pair `(f̄, h̄)` together with the sampled profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub n: usize,
    pub grid: Grid,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub h: Vec<f64>,
    /// `h̄′ = K(h̄, f̄, f̄′, φ′)` at the nodes.
    pub hp: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_p: Vec<f64>,
}

/// `f̄` interpolates `a → b` linearly; `h̄′ = K(h̄, f̄, f̄′, φ′)` starts at
/// `H(f̄(0), f̄′(0), φ(0))`.
pub fn background(p: &ProblemData, g: &Grid) -> Result<Background> {
    p.validate()?;
    if (g.sigma() - p.sigma).abs() > 1e-15 * p.sigma {
        return Err(Error::InvalidProblem(format!(
            "grid length {} differs from sigma = {}",
            g.sigma(),
            p.sigma
        )));
    }
    let s = &p.structure;
    let n = s.n();
    let m = g.len();
    let sigma = p.sigma;
    let prof = profiles_on_r(p);
    let slope: Vec<f64> = p.a.iter().zip(&p.b).map(|(a, b)| (b - a) / sigma).collect();
    let fbar = |r: f64, out: &mut [f64]| {
        for i in 0..n {
            out[i] = p.a[i] * (sigma - r) / sigma + p.b[i] * r / sigma;
        }
    };

    let mut f = vec![0.0; n * m];
    let mut fp = vec![0.0; n * m];
    let mut phi = vec![0.0; n * m];
    let mut phi_p = vec![0.0; n * m];
    for j in 0..m {
        let r = g.r(j);
        let row = j * n..(j + 1) * n;
        if j == 0 {
            f[row.clone()].copy_from_slice(&p.a);
        } else if j + 1 == m {
            f[row.clone()].copy_from_slice(&p.b);
        } else {
            fbar(r, &mut f[row.clone()]);
        }
        fp[row.clone()].copy_from_slice(&slope);
        prof.phi_into(r, &mut phi[row.clone()])?;
        prof.phi_p_into(r, &mut phi_p[row])?;
    }

    let h0 = h_unchecked(&p.a, &slope, &phi[..n], s)?;
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let mut rhs = |r: f64, y: &[f64], out: &mut [f64]| {
        fbar(r, &mut xs);
        // substeps may round a hair past σ
        if prof.phi_p_into(r.clamp(0.0, sigma), &mut ws).is_err() {
            out[0] = f64::NAN;
            return;
        }
        out[0] = k_unchecked(y[0], &xs, &slope, &ws, s);
    };
    let mut h = vec![0.0; m];
    h[0] = h0;
    let dr = g.step();
    for j in 0..m - 1 {
        let mut y = vec![h[j]];
        let r0 = g.r(j);
        let sub = dr / SUBSTEPS as f64;
        for k in 0..SUBSTEPS {
            y = rk4_step(&mut rhs, r0 + k as f64 * sub, &y, sub);
        }
        if !(y[0] > 0.0) {
            return Err(Error::NonPositive(format!(
                "background h crosses zero near r = {}",
                g.r(j + 1)
            )));
        }
        h[j + 1] = y[0];
    }
    let hp = (0..m)
        .map(|j| {
            let row = j * n..(j + 1) * n;
            k_unchecked(h[j], &f[row.clone()], &slope, &phi_p[row], s)
        })
        .collect();
    Ok(Background {
        n,
        grid: *g,
        f,
        fp,
        h,
        hp,
        phi,
        phi_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::SmoothProfile;
    use crate::structure::HomogeneousStructure;

    #[test]
    fn constant_torus_background() {
        let p = ProblemData::new(
            HomogeneousStructure::abelian(2).unwrap(),
            0.05,
            vec![SmoothProfile::Constant(1.0); 2],
            vec![1.0; 2],
            vec![1.0; 2],
            false,
        )
        .unwrap();
        let g = Grid::new(101, 0.05).unwrap();
        let bg = background(&p, &g).unwrap();
        for &h in &bg.h {
            assert!((h - 0.5f64.sqrt()).abs() < 1e-15);
        }
        assert!(bg.fp.iter().all(|&v| v == 0.0) && bg.hp.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sphere_constant_background() {
        let s = HomogeneousStructure::new(vec![2], vec![2.0], vec![0.0], false).unwrap();
        let p = ProblemData::new(
            s,
            0.1,
            vec![SmoothProfile::Constant(3.0)],
            vec![1.2],
            vec![1.2],
            false,
        )
        .unwrap();
        let g = Grid::new(11, 0.1).unwrap();
        let bg = background(&p, &g).unwrap();
        // H₂(a, φ) = 2 (3 − 1) / 1.44
        let expect = (4.0f64 / 1.44).powf(-0.5);
        assert!(bg.h.iter().all(|h| (h - expect).abs() < 1e-14));
    }

    #[test]
    fn endpoints_exact() {
        let p = ProblemData::new(
            HomogeneousStructure::abelian(2).unwrap(),
            0.3,
            vec![
                SmoothProfile::Polynomial(vec![1.0, 0.1]),
                SmoothProfile::Constant(1.0),
            ],
            vec![1.0, 0.9],
            vec![1.1, 1.3],
            false,
        )
        .unwrap();
        let g = Grid::new(7, 0.3).unwrap();
        let bg = background(&p, &g).unwrap();
        assert_eq!(&bg.f[..2], &[1.0, 0.9]);
        assert_eq!(&bg.f[12..], &[1.1, 1.3]);
    }

    #[test]
    fn undefined_head_propagates() {
        let p = ProblemData::new(
            HomogeneousStructure::abelian(2).unwrap(),
            1.0,
            vec![SmoothProfile::Constant(0.0); 2],
            vec![1.0; 2],
            vec![1.0; 2],
            true,
        )
        .unwrap();
        let g = Grid::new(5, 1.0).unwrap();
        assert!(matches!(background(&p, &g), Err(Error::HUndefined { .. })));
    }
}
