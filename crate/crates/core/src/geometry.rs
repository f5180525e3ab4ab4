//! Pointwise curvature kernels.
//!
//! The metric on the tube is `h(r)² dr² + Σ_i f_i(r)² Q|_{p_i}`. Everything
//! here is closed-form algebra on one 2-jet of `(h, f)`; arguments named
//! `p`, `x`, `y`, `z`, `w` follow the roles `h`, `f`, `f′`, `φ`, `φ′`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::HomogeneousStructure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricJet {
    pub h: f64,
    pub hp: f64,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciComponents {
    /// Coefficient of `dr ⊗ dr`.
    pub sigma_bar: f64,
    /// Coefficient of `Q` on each `p_i`.
    pub orbit: Vec<f64>,
}

fn positive(name: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !(*x > 0.0)) {
        None => Ok(()),
        Some(i) => Err(Error::DomainError(format!(
            "{name}_{} = {} is not positive",
            i + 1,
            v[i]
        ))),
    }
}

fn lengths(s: &HomogeneousStructure, vs: &[&[f64]]) -> Result<()> {
    let n = s.n();
    if vs.iter().any(|v| v.len() != n) {
        return Err(Error::DomainError(format!(
            "argument vectors must have length {n}"
        )));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("p = {p} is not positive")))
    }
}

/// `Σ_{k,l} γ_{i,k}^l (x_i⁴ − 2x_k⁴) / (4 x_k² x_l²)`.
#[inline]
fn gamma_term(s: &HomogeneousStructure, i: usize, x: &[f64]) -> f64 {
    let n = s.n();
    let xi4 = x[i].powi(4);
    let mut acc = 0.0;
    for k in 0..n {
        let xk2 = x[k] * x[k];
        let num = xi4 - 2.0 * xk2 * xk2;
        for l in 0..n {
            let g = s.gamma(i, k, l);
            if g != 0.0 {
                acc += g * num / (4.0 * xk2 * x[l] * x[l]);
            }
        }
    }
    acc
}

pub(crate) fn h1_unchecked(x: &[f64], y: &[f64], s: &HomogeneousStructure) -> f64 {
    let mut sum_dl = 0.0;
    for (l, (yl, xl)) in y.iter().zip(x).enumerate() {
        sum_dl += s.dim(l) * yl / xl;
    }
    let mut acc = 0.0;
    for k in 0..s.n() {
        let q = y[k] / x[k];
        acc += s.dim(k) * (q * sum_dl - q * q);
    }
    1.0 - acc
}

pub(crate) fn h2_unchecked(x: &[f64], z: &[f64], s: &HomogeneousStructure) -> f64 {
    let beta = s.beta();
    let mut acc = 0.0;
    for k in 0..s.n() {
        let xk2 = x[k] * x[k];
        acc += s.dim(k) * (z[k] / xk2 - beta[k] / (2.0 * xk2) - gamma_term(s, k, x) / xk2);
    }
    acc
}

pub(crate) fn h_unchecked(
    x: &[f64],
    y: &[f64],
    z: &[f64],
    s: &HomogeneousStructure,
) -> Result<f64> {
    let h1 = h1_unchecked(x, y, s);
    let h2 = h2_unchecked(x, z, s);
    let ratio = h1 / h2;
    if h2 == 0.0 || !(ratio >= 0.0) {
        return Err(Error::HUndefined { h1, h2 });
    }
    Ok(ratio.sqrt())
}

pub(crate) fn k_unchecked(
    p: f64,
    x: &[f64],
    y: &[f64],
    w: &[f64],
    s: &HomogeneousStructure,
) -> f64 {
    let p3 = p * p * p;
    let mut acc = 0.0;
    for i in 0..s.n() {
        acc += s.dim(i) * (p * y[i] / x[i] - p3 * w[i] / (2.0 * x[i] * x[i]));
    }
    acc
}

pub(crate) fn f_unchecked(
    p: f64,
    q: f64,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    s: &HomogeneousStructure,
    out: &mut [f64],
) {
    let beta = s.beta();
    let p2 = p * p;
    let sum_dk: f64 = (0..s.n()).map(|k| s.dim(k) * y[k] / x[k]).sum();
    for i in 0..s.n() {
        out[i] = beta[i] * p2 / (2.0 * x[i]) + p2 * gamma_term(s, i, x) / x[i] - y[i] * sum_dk
            + y[i] * y[i] / x[i]
            + q * y[i] / p
            - p2 * z[i] / x[i];
    }
}

pub(crate) fn f_tilde_unchecked(
    p: f64,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    w: &[f64],
    s: &HomogeneousStructure,
    out: &mut [f64],
) {
    let q = k_unchecked(p, x, y, w, s);
    f_unchecked(p, q, x, y, z, s, out);
}

/// `H₁(x, y) = 1 − Σ_k d_k (Σ_l d_l y_k y_l / (x_k x_l) − y_k² / x_k²)`.
pub fn eval_h1(x: &[f64], y: &[f64], s: &HomogeneousStructure) -> Result<f64> {
    lengths(s, &[x, y])?;
    positive("x", x)?;
    Ok(h1_unchecked(x, y, s))
}

/// `H₂(x, z) = Σ_k d_k (z_k/x_k² − β_k/(2x_k²) − Σ_{l,m} γ_{k,l}^m (x_k⁴ − 2x_l⁴)/(4x_k²x_l²x_m²))`.
pub fn eval_h2(x: &[f64], z: &[f64], s: &HomogeneousStructure) -> Result<f64> {
    lengths(s, &[x, z])?;
    positive("x", x)?;
    Ok(h2_unchecked(x, z, s))
}

/// `H = (H₁ / H₂)^{1/2}`; [`Error::HUndefined`] outside its domain.
pub fn eval_h(x: &[f64], y: &[f64], z: &[f64], s: &HomogeneousStructure) -> Result<f64> {
    lengths(s, &[x, y, z])?;
    positive("x", x)?;
    h_unchecked(x, y, z, s)
}

pub fn eval_f(
    p: f64,
    q: f64,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    s: &HomogeneousStructure,
) -> Result<Vec<f64>> {
    lengths(s, &[x, y, z])?;
    check_p(p)?;
    positive("x", x)?;
    let mut out = vec![0.0; s.n()];
    f_unchecked(p, q, x, y, z, s, &mut out);
    Ok(out)
}

/// `K(p, x, y, w) = Σ_i d_i (p y_i/x_i − p³ w_i/(2x_i²))`.
pub fn eval_k(p: f64, x: &[f64], y: &[f64], w: &[f64], s: &HomogeneousStructure) -> Result<f64> {
    lengths(s, &[x, y, w])?;
    check_p(p)?;
    positive("x", x)?;
    Ok(k_unchecked(p, x, y, w, s))
}

/// `F̃(p, x, y, z, w) = F(p, K(p, x, y, w), x, y, z)`.
pub fn eval_f_tilde(
    p: f64,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    w: &[f64],
    s: &HomogeneousStructure,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; s.n()];
    eval_f_tilde_into(p, x, y, z, w, s, &mut out)?;
    Ok(out)
}

pub fn eval_f_tilde_into(
    p: f64,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    w: &[f64],
    s: &HomogeneousStructure,
    out: &mut [f64],
) -> Result<()> {
    lengths(s, &[x, y, z, w, out])?;
    check_p(p)?;
    positive("x", x)?;
    f_tilde_unchecked(p, x, y, z, w, s, out);
    Ok(())
}

fn check_jet(j: &MetricJet, s: &HomogeneousStructure) -> Result<()> {
    lengths(s, &[&j.f, &j.fp, &j.fpp])?;
    check_p(j.h)?;
    positive("f", &j.f)
}

pub fn ricci_components(j: &MetricJet, s: &HomogeneousStructure) -> Result<RicciComponents> {
    check_jet(j, s)?;
    let n = s.n();
    let (h, hp) = (j.h, j.hp);
    let (f, fp, fpp) = (&j.f, &j.fp, &j.fpp);
    let beta = s.beta();
    let mut sigma_bar = 0.0;
    let mut mean_curv = 0.0;
    for k in 0..n {
        sigma_bar -= s.dim(k) * (fpp[k] / f[k] - hp * fp[k] / (h * f[k]));
        mean_curv += s.dim(k) * fp[k] / (h * f[k]);
    }
    let h2 = h * h;
    let orbit = (0..n)
        .map(|i| {
            beta[i] / 2.0 + gamma_term(s, i, f) - f[i] * fp[i] / h * mean_curv + fp[i] * fp[i] / h2
                - f[i] * fpp[i] / h2
                + f[i] * hp * fp[i] / (h2 * h)
        })
        .collect();
    Ok(RicciComponents { sigma_bar, orbit })
}

/// Defect of the contracted Bianchi identity at one point; zero when it holds.
pub fn bianchi_residual(
    j: &MetricJet,
    sigma_bar: f64,
    sigma_bar_p: f64,
    phi: &[f64],
    phi_p: &[f64],
    s: &HomogeneousStructure,
) -> Result<f64> {
    check_jet(j, s)?;
    // phi itself does not enter; it is accepted so callers pass the full data
    lengths(s, &[phi, phi_p])?;
    let (h, hp) = (j.h, j.hp);
    let h2 = h * h;
    let mut acc = 0.0;
    for k in 0..s.n() {
        acc +=
            s.dim(k) * (phi_p[k] / (2.0 * j.f[k] * j.f[k]) - sigma_bar * j.fp[k] / (h2 * j.f[k]));
    }
    Ok(sigma_bar_p / (2.0 * h2) - sigma_bar * hp / (h2 * h) - acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> HomogeneousStructure {
        HomogeneousStructure::abelian(2).unwrap()
    }

    fn sphere() -> HomogeneousStructure {
        HomogeneousStructure::new(vec![2], vec![2.0], vec![0.0], false).unwrap()
    }

    #[test]
    fn h1_examples() {
        assert_eq!(eval_h1(&[1.3, 0.7], &[0.0, 0.0], &torus()).unwrap(), 1.0);
        assert_eq!(eval_h1(&[1.0, 1.0], &[1.0, 1.0], &torus()).unwrap(), -1.0);
        let s = sphere();
        // one module: the two inner terms cancel only when d_1 = 1; with d_1 = 2 the value is 1 - 2 y^2/x^2
        assert!((eval_h1(&[2.0], &[1.0], &s).unwrap() - (1.0 - 2.0 * 0.25)).abs() < 1e-15);
        assert!(eval_h1(&[0.0, 1.0], &[0.0, 0.0], &torus()).is_err());
    }

    #[test]
    fn h2_examples() {
        assert_eq!(eval_h2(&[1.0, 2.0], &[0.0, 0.0], &torus()).unwrap(), 0.0);
        assert_eq!(eval_h2(&[1.0, 2.0], &[4.0, 4.0], &torus()).unwrap(), 5.0);
        assert_eq!(eval_h2(&[1.0], &[2.0], &sphere()).unwrap(), 2.0);
    }

    #[test]
    fn h_examples() {
        let r = eval_h(&[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0], &torus()).unwrap();
        assert!((r - 0.5_f64.sqrt()).abs() < 1e-15);
        let r = eval_h(&[1.0], &[0.0], &[2.0], &sphere()).unwrap();
        assert!((r - 0.5_f64.sqrt()).abs() < 1e-15);
        match eval_h(&[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], &torus()) {
            Err(Error::HUndefined { h1, h2 }) => assert_eq!((h1, h2), (1.0, 0.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn f_examples() {
        let z = eval_f(1.0, 0.0, &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], &torus()).unwrap();
        assert_eq!(z, vec![0.0, 0.0]);
        let v = eval_f(1.0, 0.0, &[1.0, 1.0], &[0.0, 0.0], &[1.0, 2.0], &torus()).unwrap();
        assert_eq!(v, vec![-1.0, -2.0]);
        assert_eq!(
            eval_f(1.0, 0.0, &[1.0], &[0.0], &[0.0], &sphere()).unwrap(),
            vec![1.0]
        );
        assert!(eval_f(0.0, 0.0, &[1.0], &[0.0], &[0.0], &sphere()).is_err());
    }

    #[test]
    fn k_examples() {
        assert_eq!(
            eval_k(1.3, &[1.0, 2.0], &[0.0, 0.0], &[0.0, 0.0], &torus()).unwrap(),
            0.0
        );
        // one-dimensional module with d = 1 sits inside the torus: second slot idle
        assert_eq!(
            eval_k(1.0, &[2.0, 1.0], &[3.0, 0.0], &[0.0, 0.0], &torus()).unwrap(),
            1.5
        );
        assert_eq!(
            eval_k(1.0, &[1.0], &[0.0], &[2.0], &sphere()).unwrap(),
            -2.0
        );
    }

    #[test]
    fn f_tilde_examples() {
        let t = torus();
        let v = eval_f_tilde(1.0, &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], &t).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
        let v = eval_f_tilde(1.0, &[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0], &[0.3, -7.0], &t).unwrap();
        assert_eq!(v, vec![-1.0, -1.0]);
        let v = eval_f_tilde(1.0, &[1.0], &[1.0], &[0.0], &[0.0], &sphere()).unwrap();
        assert_eq!(v, vec![2.0]);
    }

    #[test]
    fn flat_torus_is_flat() {
        let j = MetricJet {
            h: 1.7,
            hp: 0.0,
            f: vec![0.4, 2.2],
            fp: vec![0.0; 2],
            fpp: vec![0.0; 2],
        };
        let r = ricci_components(&j, &torus()).unwrap();
        assert_eq!(r.sigma_bar, 0.0);
        assert_eq!(r.orbit, vec![0.0, 0.0]);
    }

    #[test]
    fn round_three_sphere() {
        let s = sphere();
        for r in [0.3, 1.0, 2.0, 2.8] {
            let j = MetricJet {
                h: 1.0,
                hp: 0.0,
                f: vec![f64::sin(r)],
                fp: vec![f64::cos(r)],
                fpp: vec![-f64::sin(r)],
            };
            let rc = ricci_components(&j, &s).unwrap();
            assert!((rc.sigma_bar - 2.0).abs() < 1e-14);
            assert!((rc.orbit[0] - 2.0 * r.sin().powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn bianchi_examples() {
        let t = torus();
        let still = MetricJet {
            h: 1.0,
            hp: 0.0,
            f: vec![1.0, 1.0],
            fp: vec![0.0; 2],
            fpp: vec![0.0; 2],
        };
        assert_eq!(
            bianchi_residual(&still, 1.0, 0.0, &[1.0; 2], &[0.0; 2], &t).unwrap(),
            0.0
        );
        // a moving first slot with d = 1: 0 - (0 - 1) = 1
        let moving = MetricJet {
            fp: vec![1.0, 0.0],
            ..still
        };
        assert_eq!(
            bianchi_residual(&moving, 1.0, 0.0, &[0.0; 2], &[0.0; 2], &t).unwrap(),
            1.0
        );
    }

    #[test]
    fn inversion_identity_sphere() {
        let s = sphere();
        let (h, f, fp, z, w) = (0.8, vec![1.3], vec![-0.4], vec![0.7], vec![0.2]);
        let fpp = eval_f_tilde(h, &f, &fp, &z, &w, &s).unwrap();
        let hp = eval_k(h, &f, &fp, &w, &s).unwrap();
        let j = MetricJet { h, hp, f, fp, fpp };
        let rc = ricci_components(&j, &s).unwrap();
        assert!((rc.orbit[0] - 0.7).abs() < 1e-14);
    }
}
