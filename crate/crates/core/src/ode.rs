//! Adaptive Dormand–Prince RK5(4) integration for two-dimensional systems
//! (the radial Euler–Lagrange equations integrated by the shooting solver).

use crate::error::{CoreError, Result};

/// Integration controls.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-12,
            atol: 1e-13,
            max_steps: 2_000_000,
        }
    }
}

const A: [[f64; 6]; 6] = [
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

/// Integrates y' = f(t, y) from (t0, y0), collecting the state at each of
/// the `targets` (which must be monotone in the march direction implied by
/// the last target relative to t0). Steps are clamped to land on targets
/// exactly.
pub fn integrate_to_targets<F>(
    f: F,
    t0: f64,
    y0: [f64; 2],
    targets: &[f64],
    opts: OdeOptions,
) -> Result<Vec<(f64, [f64; 2])>>
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    let dir = (targets[targets.len() - 1] - t0).signum();
    if dir == 0.0 {
        return Err(CoreError::Domain("degenerate integration range".into()));
    }
    let total = (targets[targets.len() - 1] - t0).abs();
    let mut out = Vec::with_capacity(targets.len());
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * (total / 100.0).min(1e-3 * total.max(1e-12));
    let mut steps = 0usize;
    for &target in targets {
        if (target - t0) * dir < -1e-14 * total {
            return Err(CoreError::Domain(
                "targets not monotone in march direction".into(),
            ));
        }
        while (target - t) * dir > 1e-15 * total {
            steps += 1;
            if steps > opts.max_steps {
                return Err(CoreError::SolverFailure(
                    "ODE integrator exceeded the step budget".into(),
                ));
            }
            let mut step = h;
            if (t + step - target) * dir > 0.0 {
                step = target - t;
            }
            let mut k = [[0.0f64; 2]; 7];
            k[0] = f(t, y);
            for stage in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    let a = if stage < 7 { A[stage - 1][j.min(5)] } else { 0.0 };
                    ys[0] += step * a * kj[0];
                    ys[1] += step * a * kj[1];
                }
                k[stage] = f(t + step * stage_c(stage), ys);
            }
            let mut y5 = y;
            let mut y4 = y;
            for j in 0..7 {
                y5[0] += step * B5[j] * k[j][0];
                y5[1] += step * B5[j] * k[j][1];
                y4[0] += step * B4[j] * k[j][0];
                y4[1] += step * B4[j] * k[j][1];
            }
            let err = {
                let e0 = (y5[0] - y4[0]).abs() / (opts.atol + opts.rtol * y5[0].abs().max(y[0].abs()));
                let e1 = (y5[1] - y4[1]).abs() / (opts.atol + opts.rtol * y5[1].abs().max(y[1].abs()));
                e0.max(e1)
            };
            if err <= 1.0 || step.abs() < 1e-14 * total {
                t += step;
                y = y5;
                let grow = if err > 0.0 {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                h = step * grow;
                if h.abs() < 1e-14 * total {
                    h = dir * 1e-14 * total;
                }
            } else {
                h = step * (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
            }
            if !y[0].is_finite() || !y[1].is_finite() {
                return Err(CoreError::SolverFailure(
                    "ODE state became non-finite".into(),
                ));
            }
        }
        out.push((target, y));
    }
    Ok(out)
}

fn stage_c(stage: usize) -> f64 {
    match stage {
        1 => 0.2,
        2 => 0.3,
        3 => 0.8,
        4 => 8.0 / 9.0,
        5 => 1.0,
        6 => 1.0,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_full_period() {
        // y'' = -y, y(0) = 1, y'(0) = 0.
        let f = |_t: f64, y: [f64; 2]| [y[1], -y[0]];
        let targets: Vec<f64> = (1..=8)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / 8.0)
            .collect();
        let path = integrate_to_targets(f, 0.0, [1.0, 0.0], &targets, OdeOptions::default())
            .unwrap();
        for (t, y) in path {
            assert!((y[0] - t.cos()).abs() < 1e-10, "t = {t}");
            assert!((y[1] + t.sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn backward_march() {
        // y' = y integrated backward: y(t) = e^t from t = 1 to 0.
        let f = |_t: f64, y: [f64; 2]| [y[0], 0.0];
        let e = std::f64::consts::E;
        let path =
            integrate_to_targets(f, 1.0, [e, 0.0], &[0.5, 0.0], OdeOptions::default()).unwrap();
        assert!((path[0].1[0] - 0.5f64.exp()).abs() < 1e-11);
        assert!((path[1].1[0] - 1.0).abs() < 1e-11);
    }
}
