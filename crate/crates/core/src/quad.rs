//! Quadrature kernels: fixed-order Gauss–Legendre panels and an adaptive
//! Gauss–Kronrod rule with square-root substitutions for integrable
//! endpoint singularities.

/// 7-point Gauss / 15-point Kronrod abscissae on [-1, 1] (nonnegative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_82,
];

/// Weights of the embedded 7-point Gauss rule (odd-indexed `XGK` entries).
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 15(7) panel. Returns (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut result_k = WGK[7] * fc;
    let mut result_g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let fsum = f(c - x) + f(c + x);
        result_k += WGK[j] * fsum;
        if j % 2 == 1 {
            result_g += WG[j / 2] * fsum;
        }
    }
    result_k *= h;
    result_g *= h;
    (result_k, (result_k - result_g).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over [a, b].
///
/// Bisects panels until the local error estimate meets the tolerance
/// share. `tol` combines absolute and relative parts against the
/// accumulated integral magnitude.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64, usize)> = vec![(a, b, 0)];
    let scale = (b - a).abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        let local_tol = tol * ((hi - lo).abs() / scale).max(1e-3);
        if err <= local_tol * val.abs().max(1.0) || depth >= 52 || (hi - lo).abs() < 1e-15 * scale
        {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// Integrates `f` over [a, b] applying square-root substitutions at the
/// flagged endpoints, so algebraic singularities with exponent > -1
/// become tractable: with t = a + u^2, `dt = 2u du` regularizes any
/// |t-a|^p factor with p a half-integer >= -1/2 and substantially
/// smooths the rest.
pub fn integrate_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    singular_left: bool,
    singular_right: bool,
    tol: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let (a, b, singular_left, singular_right, sign) = if a > b {
        (b, a, singular_right, singular_left, -1.0)
    } else {
        (a, b, singular_left, singular_right, 1.0)
    };
    let ordered = |f: &F, lo: f64, hi: f64, s_lo: bool, s_hi: bool| -> f64 {
        match (s_lo, s_hi) {
            (false, false) => integrate(|t| f(t), lo, hi, tol),
            (true, false) => {
                let len = hi - lo;
                integrate(|u| 2.0 * u * f(lo + u * u), 0.0, len.sqrt(), tol)
            }
            (false, true) => {
                let len = hi - lo;
                integrate(|u| 2.0 * u * f(hi - u * u), 0.0, len.sqrt(), tol)
            }
            (true, true) => unreachable!(),
        }
    };
    let value = if singular_left && singular_right {
        let mid = 0.5 * (a + b);
        ordered(&f, a, mid, true, false) + ordered(&f, mid, b, false, true)
    } else {
        ordered(&f, a, b, singular_left, singular_right)
    };
    sign * value
}

/// Gauss–Legendre nodes and weights of order `n` on [-1, 1].
///
/// Computed by Newton iteration on the Legendre recurrence; accurate to
/// machine precision for the small orders used here.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|l, r| l.0.partial_cmp(&r.0).unwrap());
    out
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Fixed-order Gauss–Legendre integral of `f` over [a, b] with a
/// precomputed rule from [`gauss_legendre`].
pub fn panel_integrate<F: Fn(f64) -> f64>(rule: &[(f64, f64)], f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for &(x, w) in rule {
        acc += w * f(c + h * x);
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_matches_closed_forms() {
        let v = integrate(|t| t.cos(), 0.0, 1.0, 1e-13);
        assert!((v - 1.0f64.sin()).abs() < 1e-13);
        let v = integrate(|t| 1.0 / (1.0 + t * t), 0.0, 1.0, 1e-13);
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-13);
    }

    #[test]
    fn singular_endpoint_sqrt() {
        // int_0^1 1/sqrt(1-t^2) dt = pi/2, integrable singularity at t = 1.
        let v = integrate_singular(|t| 1.0 / (1.0 - t * t).sqrt(), 0.0, 1.0, false, true, 1e-13);
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        // int_0^1 sqrt(1-t^2) dt = pi/4.
        let v = integrate_singular(|t| (1.0 - t * t).sqrt(), 0.0, 1.0, false, true, 1e-13);
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_degree_exactness() {
        // Order-n rule integrates polynomials up to degree 2n-1 exactly.
        let rule = gauss_legendre(16);
        let v = panel_integrate(&rule, |t| t.powi(30), 0.0, 1.0);
        assert!((v - 1.0 / 31.0).abs() < 1e-15);
        let v = panel_integrate(&rule, |t| t.powi(31), -1.0, 2.0);
        let exact = (2.0f64.powi(32) - 1.0) / 32.0;
        assert!((v - exact).abs() / exact < 1e-14);
    }
}
