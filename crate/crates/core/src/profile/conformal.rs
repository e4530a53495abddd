//! Conformal deformations within the radial class: for a positive radial
//! function u, the metric u^{p_n - 2} g again carries the same
//! isoparametric function, and its profile transforms by closed formulas.

use crate::curve::ScalarCurve;
use crate::error::{CoreError, Result};
use crate::exponents::{a_n, p_n};

use super::{BoundaryComponent, Endpoint, IsoparametricProfile, WeightNorm};

/// Number of knots used for the splined smooth factors of a conformal image.
const CONFORMAL_KNOTS: usize = 2049;

/// Radial conformal Laplacian L_g(u)(t) = a_n (-b u'' + a u') + s_g u.
pub fn radial_conformal_laplacian(p: &IsoparametricProfile, u: &ScalarCurve, t: f64) -> f64 {
    a_n(p.dim) * (-p.b.eval(t) * u.deriv2(t) + p.a.eval(t) * u.deriv(t)) + p.s.eval(t) * u.eval(t)
}

/// Radial boundary operator B_g(u) at a boundary component:
/// (2/(n-2)) sigma sqrt(b(r)) u'(r) + h_g(r) u(r).
pub fn radial_boundary_operator(
    p: &IsoparametricProfile,
    comp: &BoundaryComponent,
    u: &ScalarCurve,
) -> f64 {
    let r = comp.param;
    let n = p.dim as f64;
    2.0 / (n - 2.0) * comp.orientation * p.b.eval(r).sqrt() * u.deriv(r) + comp.mean_curvature * u.eval(r)
}

/// Profile of the conformal metric u^{p_n - 2} g.
///
/// The transformed scalar curvature is u^{1 - p_n} L_g(u), the boundary
/// mean curvature u^{-p_n/2} B_g(u), the gradient square b/phi and the
/// weight phi^{n/2} w with phi = u^{p_n - 2}. Smooth transformed data is
/// splined; the weight keeps the original singular endpoint factors exact.
pub fn conformal_change(
    p: &IsoparametricProfile,
    u: &ScalarCurve,
) -> Result<IsoparametricProfile> {
    if p.dim < 3 {
        return Err(CoreError::DimensionTooLow(p.dim));
    }
    p.require_usable()?;
    let n = p.dim;
    let nf = n as f64;
    let pn = p_n(n);
    let e = pn - 2.0;
    let (ta, tb) = p.interval;

    // Positivity of the conformal factor on a dense sample.
    for i in 0..=2048 {
        let t = ta + (tb - ta) * i as f64 / 2048.0;
        let v = u.eval(t);
        if !(v > 0.0) || !v.is_finite() {
            return Err(CoreError::Domain(format!(
                "conformal factor must be positive, u({t}) = {v}"
            )));
        }
    }

    let phi = |t: f64| u.eval(t).powf(e);
    let phi_prime = |t: f64| e * u.eval(t).powf(e - 1.0) * u.deriv(t);

    let a_new = ScalarCurve::sample(
        |t| {
            let ph = phi(t);
            p.a.eval(t) / ph - (nf - 2.0) * phi_prime(t) * p.b.eval(t) / (2.0 * ph * ph)
        },
        ta,
        tb,
        CONFORMAL_KNOTS,
    )?;
    let b_new = ScalarCurve::Product {
        factors: vec![
            p.b.clone(),
            ScalarCurve::sample(|t| 1.0 / phi(t), ta, tb, CONFORMAL_KNOTS)?,
        ],
    };
    let s_new = ScalarCurve::sample(
        |t| u.eval(t).powf(1.0 - pn) * radial_conformal_laplacian(p, u, t),
        ta,
        tb,
        CONFORMAL_KNOTS,
    )?;
    let w_new = ScalarCurve::Product {
        factors: vec![
            p.weight_curve()?,
            ScalarCurve::sample(|t| phi(t).powf(nf / 2.0), ta, tb, CONFORMAL_KNOTS)?,
        ],
    };

    let lift = |endp: &Endpoint| -> Endpoint {
        match endp {
            Endpoint::Boundary(c) => Endpoint::Boundary(BoundaryComponent {
                param: c.param,
                orientation: c.orientation,
                mean_curvature: u.eval(c.param).powf(-pn / 2.0)
                    * radial_boundary_operator(p, c, u),
            }),
            Endpoint::Focal(f) => Endpoint::Focal(f.clone()),
        }
    };

    let t_ref = p.weight_norm.t_ref;
    Ok(IsoparametricProfile {
        name: format!("conformal({})", p.name),
        dim: n,
        interval: p.interval,
        a: a_new,
        b: b_new,
        s: s_new,
        left: lift(&p.left),
        right: lift(&p.right),
        weight_norm: WeightNorm {
            t_ref,
            area: p.weight_norm.area * phi(t_ref).powf((nf - 1.0) / 2.0),
        },
        weight: Some(w_new),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::make_hemisphere;

    fn max_curve_diff(
        f: &ScalarCurve,
        g: &ScalarCurve,
        ta: f64,
        tb: f64,
        samples: usize,
    ) -> f64 {
        (0..=samples)
            .map(|i| {
                let t = ta + (tb - ta) * i as f64 / samples as f64;
                (f.eval(t) - g.eval(t)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_factor_returns_same_profile() {
        let p = make_hemisphere(3).unwrap();
        let q = conformal_change(&p, &ScalarCurve::constant(1.0)).unwrap();
        let (ta, tb) = p.interval;
        assert!(max_curve_diff(&p.a, &q.a, ta, tb, 700) < 1e-12);
        assert!(max_curve_diff(&p.b, &q.b, ta, tb, 700) < 1e-12);
        assert!(max_curve_diff(&p.s, &q.s, ta, tb, 700) < 1e-12);
        let w0 = p.weight_curve().unwrap();
        let w1 = q.weight_curve().unwrap();
        assert!(max_curve_diff(&w0, &w1, ta, tb, 700) < 1e-12 * 4.0 * std::f64::consts::PI);
        assert!((q.weight_norm.area - p.weight_norm.area).abs() < 1e-12);
        let (h0, h1) = (
            p.left.as_boundary().unwrap().mean_curvature,
            q.left.as_boundary().unwrap().mean_curvature,
        );
        assert!((h0 - h1).abs() < 1e-12);
    }

    #[test]
    fn constant_factor_scales_curvature_and_volume() {
        let p = make_hemisphere(3).unwrap();
        let c = 1.7f64;
        let q = conformal_change(&p, &ScalarCurve::constant(c)).unwrap();
        let pn = 6.0;
        // s scales by c^{2 - p_n}, volume by c^{p_n}.
        let expect_s = 6.0 * c.powf(2.0 - pn);
        assert!((q.s.eval(0.4) - expect_s).abs() < 1e-10 * expect_s.abs());
        let v0 = p.volume().unwrap();
        let v1 = q.volume().unwrap();
        assert!((v1 - c.powf(pn) * v0).abs() < 1e-8 * v1);
    }

    #[test]
    fn generic_factor_keeps_profile_usable_and_consistent() {
        let p = make_hemisphere(3).unwrap();
        let u = ScalarCurve::sample(|t| (0.2 * t - 0.1 * t * t).exp(), 0.0, 1.0, 257).unwrap();
        let q = conformal_change(&p, &u).unwrap();
        let report = q.validate();
        assert!(report.is_usable(), "violations: {:?}", report.violations);
        // The transformed data still satisfies the weight ODE (b w)' = -a w.
        let w = q.weight_curve().unwrap();
        for k in 1..20 {
            let t = 0.95 * k as f64 / 20.0;
            let lhs = q.b.deriv(t) * w.eval(t) + q.b.eval(t) * w.deriv(t);
            let rhs = -q.a.eval(t) * w.eval(t);
            assert!(
                (lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()),
                "weight ODE residual at t = {t}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn positivity_is_enforced() {
        let p = make_hemisphere(3).unwrap();
        let u = ScalarCurve::poly(&[0.5, -1.0]); // changes sign inside
        assert!(matches!(
            conformal_change(&p, &u),
            Err(CoreError::Domain(_))
        ));
    }
}
