//! Cumulative quadrature and finite differences on uniform grids, all of
//! fourth order.

/// `I_j = ∫_{r_0}^{r_j} g` from samples `g_j` with spacing `h`.
///
/// Each cell uses the cubic through the four nearest samples; the first and
/// last cells use one-sided cubics. Three samples fall back to the quadratic.
pub fn cumulative(g: &[f64], h: f64) -> Vec<f64> {
    let m = g.len();
    let mut out = vec![0.0; m];
    if m < 2 {
        return out;
    }
    if m == 2 {
        out[1] = 0.5 * h * (g[0] + g[1]);
        return out;
    }
    if m == 3 {
        out[1] = h / 12.0 * (5.0 * g[0] + 8.0 * g[1] - g[2]);
        out[2] = out[1] + h / 12.0 * (-g[0] + 8.0 * g[1] + 5.0 * g[2]);
        return out;
    }
    let c = h / 24.0;
    for j in 0..m - 1 {
        let cell = if j == 0 {
            9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]
        } else if j == m - 2 {
            g[m - 4] - 5.0 * g[m - 3] + 19.0 * g[m - 2] + 9.0 * g[m - 1]
        } else {
            -g[j - 1] + 13.0 * g[j] + 13.0 * g[j + 1] - g[j + 2]
        };
        out[j + 1] = out[j] + c * cell;
    }
    out
}

/// First derivative of samples `v_j` with spacing `h`: five-point central
/// stencil inside, five-point one-sided stencils at the two nodes nearest each
/// end. Needs at least five samples.
pub fn derivative(v: &[f64], h: f64) -> Vec<f64> {
    let m = v.len();
    assert!(m >= 5, "fourth-order differences need five samples");
    let c = 1.0 / (12.0 * h);
    let mut out = vec![0.0; m];
    out[0] = c * (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]);
    out[1] = c * (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]);
    for j in 2..m - 2 {
        out[j] = c * (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]);
    }
    out[m - 2] =
        c * (3.0 * v[m - 1] + 10.0 * v[m - 2] - 18.0 * v[m - 3] + 6.0 * v[m - 4] - v[m - 5]);
    out[m - 1] = c
        * (25.0 * v[m - 1] - 48.0 * v[m - 2] + 36.0 * v[m - 3] - 16.0 * v[m - 4] + 3.0 * v[m - 5]);
    out
}

/// Column `i` of a node-major array with `n` columns.
pub fn column(values: &[f64], n: usize, i: usize) -> Vec<f64> {
    values.iter().skip(i).step_by(n).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(m: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, f64) {
        let h = 1.0 / (m - 1) as f64;
        ((0..m).map(|j| f(j as f64 * h)).collect(), h)
    }

    #[test]
    fn cubic_integrated_exactly() {
        let (g, h) = samples(11, |t| 1.0 - 2.0 * t + 3.0 * t * t - 4.0 * t * t * t);
        let cum = cumulative(&g, h);
        for (j, c) in cum.iter().enumerate() {
            let t = j as f64 * h;
            let exact = t - t * t + t * t * t - t.powi(4);
            assert!((c - exact).abs() < 1e-14, "{j}: {c} vs {exact}");
        }
    }

    #[test]
    fn quadrature_is_fourth_order() {
        let err = |m: usize| {
            let (g, h) = samples(m, |t| (3.0 * t).cos());
            let cum = cumulative(&g, h);
            (cum[m - 1] - (3.0f64).sin() / 3.0).abs()
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 14.0 && ratio < 18.5, "{ratio}");
    }

    #[test]
    fn quartic_differentiated_exactly() {
        let (v, h) = samples(9, |t| t.powi(4) - t * t + 2.0);
        let d = derivative(&v, h);
        for (j, dj) in d.iter().enumerate() {
            let t = j as f64 * h;
            assert!((dj - (4.0 * t.powi(3) - 2.0 * t)).abs() < 1e-12, "{j}");
        }
    }

    #[test]
    fn derivative_is_fourth_order() {
        let err = |m: usize| {
            let (v, h) = samples(m, |t| (2.0 * t).sin());
            derivative(&v, h)
                .iter()
                .enumerate()
                .map(|(j, d)| (d - 2.0 * (2.0 * j as f64 * h).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 13.0 && ratio < 19.0, "{ratio}");
    }

    #[test]
    fn short_series() {
        assert_eq!(cumulative(&[2.0, 2.0, 2.0], 0.5), vec![0.0, 1.0, 2.0]);
        assert_eq!(column(&[1.0, 2.0, 3.0, 4.0], 2, 1), vec![2.0, 4.0]);
    }
}
