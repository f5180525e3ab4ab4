//! Explicit Runge–Kutta integrators: classical RK4 with fixed steps and
//! Dormand–Prince 5(4) with step-size control and dense landing on targets.

/// One classical RK4 step of `y′ = rhs(t, y)`.
pub fn rk4_step<F>(rhs: &mut F, t: f64, y: &[f64], dt: f64) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let m = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    rhs(t, y, &mut k1);
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    }
    rhs(t + 0.5 * dt, &tmp, &mut k2);
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    rhs(t + 0.5 * dt, &tmp, &mut k3);
    for i in 0..m {
        tmp[i] = y[i] + dt * k3[i];
    }
    rhs(t + dt, &tmp, &mut k4);
    (0..m)
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Steps shorter than this fraction of the span count as underflow.
    pub min_step_fraction: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rtol: 1e-12,
            atol: 1e-14,
            min_step_fraction: 1e-14,
            max_steps: 10_000_000,
        }
    }
}

/// Why [`integrate_to_targets`] stopped before the last target.
#[derive(Debug, Clone, PartialEq)]
pub enum Halt {
    /// All targets reached.
    Completed,
    /// The guard rejected the state at time `t`.
    Guard { t: f64 },
    /// The right-hand side produced non-finite values near `t`.
    NonFinite { t: f64 },
    /// The step size collapsed at `t`.
    StepUnderflow { t: f64 },
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y′ = rhs(t, y)` from `(t0, y0)` through the monotone list of
/// `targets` (increasing or decreasing), landing exactly on each. `guard`
/// is consulted after every accepted step; returns the states at the reached
/// targets and the reason for stopping.
pub fn integrate_to_targets<F, G>(
    rhs: &mut F,
    guard: &mut G,
    t0: f64,
    y0: &[f64],
    targets: &[f64],
    opts: &AdaptiveOptions,
) -> (Vec<Vec<f64>>, Halt)
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(f64, &[f64]) -> bool,
{
    let m = y0.len();
    let mut out = Vec::with_capacity(targets.len());
    let Some(&last) = targets.last() else {
        return (out, Halt::Completed);
    };
    let span = (last - t0).abs();
    if span == 0.0 {
        out.extend(targets.iter().map(|_| y0.to_vec()));
        return (out, Halt::Completed);
    }
    let dir = (last - t0).signum();
    let min_step = opts.min_step_fraction * span.max(t0.abs());
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; m]; 7];
    let mut stage = vec![0.0; m];
    let mut y5 = vec![0.0; m];
    let mut dt = dir * span * 1e-3;
    let mut steps = 0;
    rhs(t, &y, &mut k[0]);

    for &target in targets {
        if (target - t) * dir <= 0.0 {
            out.push(y.clone());
            continue;
        }
        while (target - t) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return (out, Halt::StepUnderflow { t });
            }
            let remaining = target - t;
            let landing = dt.abs() >= remaining.abs();
            let h = if landing { remaining } else { dt };
            for s in 1..7 {
                for i in 0..m {
                    let mut acc = y[i];
                    for (r, ar) in A[s].iter().enumerate().take(s) {
                        acc += h * ar * k[r][i];
                    }
                    stage[i] = acc;
                }
                rhs(t + C[s] * h, &stage, &mut k[s]);
            }
            let mut err = 0.0_f64;
            let mut finite = true;
            for i in 0..m {
                let mut hi = y[i];
                let mut lo = y[i];
                for s in 0..7 {
                    hi += h * B5[s] * k[s][i];
                    lo += h * B4[s] * k[s][i];
                }
                y5[i] = hi;
                finite &= hi.is_finite();
                let scale = opts.atol + opts.rtol * y[i].abs().max(hi.abs());
                err = err.max(((hi - lo) / scale).abs());
            }
            if !finite || !err.is_finite() {
                if h.abs() <= min_step {
                    return (out, Halt::NonFinite { t });
                }
                dt = 0.25 * h;
                continue;
            }
            if err <= 1.0 {
                t = if landing { target } else { t + h };
                std::mem::swap(&mut y, &mut y5);
                // FSAL: the last stage is the derivative at the new point
                k.swap(0, 6);
                if !guard(t, &y) {
                    return (out, Halt::Guard { t });
                }
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !landing || h.abs() >= dt.abs() * 0.999 {
                    dt = h * grow;
                }
            } else {
                dt = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if dt.abs() < min_step {
                    return (out, Halt::StepUnderflow { t });
                }
            }
        }
        out.push(y.clone());
    }
    (out, Halt::Completed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_is_fourth_order() {
        let err = |steps: usize| {
            let dt = 1.0 / steps as f64;
            let mut y = vec![1.0];
            let mut f = |_t: f64, y: &[f64], out: &mut [f64]| out[0] = -2.0 * y[0];
            for s in 0..steps {
                y = rk4_step(&mut f, s as f64 * dt, &y, dt);
            }
            (y[0] - (-2.0f64).exp()).abs()
        };
        let ratio = err(20) / err(40);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }

    #[test]
    fn oscillator_lands_on_targets() {
        let mut f = |_t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = y[1];
            out[1] = -y[0];
        };
        let targets: Vec<f64> = (1..=10).map(|j| j as f64 * 0.3).collect();
        let (ys, halt) = integrate_to_targets(
            &mut f,
            &mut |_, _| true,
            0.0,
            &[0.0, 1.0],
            &targets,
            &AdaptiveOptions::default(),
        );
        assert_eq!(halt, Halt::Completed);
        for (t, y) in targets.iter().zip(&ys) {
            assert!((y[0] - t.sin()).abs() < 1e-10 && (y[1] - t.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn backward_integration() {
        let mut f = |_t: f64, y: &[f64], out: &mut [f64]| out[0] = y[0];
        let (ys, halt) = integrate_to_targets(
            &mut f,
            &mut |_, _| true,
            1.0,
            &[1.0],
            &[0.5, 0.0],
            &AdaptiveOptions::default(),
        );
        assert_eq!(halt, Halt::Completed);
        assert!((ys[1][0] - (-1.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn guard_stops_blowup() {
        // y' = y², y(0) = 1 blows up at t = 1
        let mut f = |_t: f64, y: &[f64], out: &mut [f64]| out[0] = y[0] * y[0];
        let targets: Vec<f64> = (1..=20).map(|j| j as f64 * 0.1).collect();
        let (ys, halt) = integrate_to_targets(
            &mut f,
            &mut |_, y: &[f64]| y[0] < 1e6,
            0.0,
            &[1.0],
            &targets,
            &AdaptiveOptions::default(),
        );
        assert!(matches!(halt, Halt::Guard { t } if t < 1.0 && t > 0.9));
        assert_eq!(ys.len(), 9);
    }
}
