//! Model-geometry profile factories.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::curve::ScalarCurve;
use crate::error::{CoreError, Result};
use crate::exponents::unit_sphere_area;

use super::{
    BoundaryComponent, Endpoint, FocalEndpoint, IsoparametricProfile, WeightNorm,
};

/// Band c1 <= x_{n+1} <= c2 of the round unit n-sphere, carrying the height
/// function f(x) = x_{n+1}.
///
/// The reduced data is a(t) = n t, b(t) = 1 - t^2, s_g = n(n-1); endpoints
/// with |c| < 1 are regular boundary spheres, |c| = 1 gives a focal point.
/// Areas are true geometric values: the level at height t is a round
/// (n-1)-sphere of radius sqrt(1 - t^2).
pub fn make_spherical_band(n: usize, c1: f64, c2: f64) -> Result<IsoparametricProfile> {
    if n < 2 {
        return Err(CoreError::InvalidProfile(format!(
            "sphere band needs dimension >= 2, got {n}"
        )));
    }
    if !(c1 < c2) {
        return Err(CoreError::InvalidProfile(format!(
            "empty band: c1 = {c1} must be < c2 = {c2}"
        )));
    }
    if c1 < -1.0 || c2 > 1.0 {
        return Err(CoreError::InvalidProfile(format!(
            "band [{c1}, {c2}] exceeds the height range [-1, 1]"
        )));
    }
    let nf = n as f64;
    let endpoint = |c: f64, orientation: f64| -> Endpoint {
        if c.abs() < 1.0 - 1e-14 {
            Endpoint::Boundary(BoundaryComponent {
                param: c,
                orientation,
                // Normalized mean curvature of the latitude sphere with
                // respect to the outward normal of the band.
                mean_curvature: orientation * c / (1.0 - c * c).sqrt(),
            })
        } else {
            Endpoint::Focal(FocalEndpoint {
                param: c.signum(),
                focal_dim: 0,
                vanishing_order: nf / 2.0 - 1.0,
            })
        }
    };
    let left = endpoint(c1, -1.0);
    let right = endpoint(c2, 1.0);
    if !left.is_boundary() && !right.is_boundary() {
        return Err(CoreError::InvalidProfile(
            "band covers the whole sphere: no boundary component".into(),
        ));
    }
    let t_ref = if c1 < 0.0 && c2 > 0.0 {
        0.0
    } else {
        0.5 * (c1 + c2)
    };
    let omega = unit_sphere_area(n - 1);
    Ok(IsoparametricProfile {
        name: format!("sphere_band(n={n},{c1},{c2})"),
        dim: n,
        interval: (c1, c2),
        a: ScalarCurve::poly(&[0.0, nf]),
        b: ScalarCurve::poly(&[1.0, 0.0, -1.0]),
        s: ScalarCurve::constant(nf * (nf - 1.0)),
        left,
        right,
        weight_norm: WeightNorm {
            t_ref,
            area: omega * (1.0 - t_ref * t_ref).powf((nf - 1.0) / 2.0),
        },
        weight: Some(ScalarCurve::PowOneMinusSq {
            coeff: omega,
            expo: (nf - 2.0) / 2.0,
        }),
    })
}

/// Upper half sphere S^n_+: the band [0, 1] with the equator as boundary.
pub fn make_hemisphere(n: usize) -> Result<IsoparametricProfile> {
    let mut p = make_spherical_band(n, 0.0, 1.0)?;
    p.name = format!("hemisphere(n={n})");
    Ok(p)
}

/// Flat-cylinder validation demo: the band of S^1 x R where f = cos z is
/// monotone with regular boundary circles, z in [pi/4, 3 pi/4], so t ranges
/// over [-sqrt(2)/2, sqrt(2)/2] and each level is a single circle of length
/// 2 pi. Reduced data a(t) = t, b(t) = 1 - t^2, s_g = 0; all levels are
/// geodesic circles so every mean curvature vanishes.
pub fn make_cylinder_demo() -> IsoparametricProfile {
    let half = FRAC_1_SQRT_2;
    let circ = 2.0 * std::f64::consts::PI;
    IsoparametricProfile {
        name: "cylinder_demo".into(),
        dim: 2,
        interval: (-half, half),
        a: ScalarCurve::poly(&[0.0, 1.0]),
        b: ScalarCurve::poly(&[1.0, 0.0, -1.0]),
        s: ScalarCurve::constant(0.0),
        left: Endpoint::Boundary(BoundaryComponent {
            param: -half,
            orientation: -1.0,
            mean_curvature: 0.0,
        }),
        right: Endpoint::Boundary(BoundaryComponent {
            param: half,
            orientation: 1.0,
            mean_curvature: 0.0,
        }),
        weight_norm: WeightNorm {
            t_ref: 0.0,
            area: circ,
        },
        weight: Some(ScalarCurve::PowOneMinusSq {
            coeff: circ,
            expo: -0.5,
        }),
    }
}

/// Riemannian product of the profiled (M^m, g) with a closed factor
/// (N^{n_factor}, h) of constant scalar curvature s_h, at scale t:
/// the metric g + t h.
///
/// The isoparametric data (a, b) is unchanged; the scalar curvature becomes
/// s_g + s_h / t, every focal dimension grows by n_factor, volumes pick up
/// t^{n_factor/2} times `factor_volume`, and boundary mean curvature is
/// rescaled to keep the second fundamental form (extended by zero on the
/// factor) consistent — in particular minimal boundaries stay minimal.
pub fn make_product(
    base: &IsoparametricProfile,
    n_factor: usize,
    s_h: f64,
    t: f64,
    factor_volume: f64,
) -> Result<IsoparametricProfile> {
    if !(t > 0.0) {
        return Err(CoreError::Domain(format!(
            "product scale t = {t} must be positive"
        )));
    }
    if !(s_h > 0.0) {
        return Err(CoreError::Domain(format!(
            "factor scalar curvature s_h = {s_h} must be positive"
        )));
    }
    if n_factor == 0 {
        return Err(CoreError::Domain("factor dimension must be >= 1".into()));
    }
    if !(factor_volume > 0.0) {
        return Err(CoreError::Domain("factor volume must be positive".into()));
    }
    let (ta, tb) = base.interval;
    let s0 = base.s.eval(0.5 * (ta + tb));
    let s_dev = (0..65)
        .map(|i| (base.s.eval(ta + (tb - ta) * i as f64 / 64.0) - s0).abs())
        .fold(0.0, f64::max);
    if s_dev > 1e-9 * (1.0 + s0.abs()) {
        return Err(CoreError::InvalidProfile(
            "product factor requires constant base scalar curvature".into(),
        ));
    }
    let m = base.dim;
    let dim = m + n_factor;
    let vol_scale = t.powf(n_factor as f64 / 2.0) * factor_volume;
    let curvature_scale = (m as f64 - 1.0) / (dim as f64 - 1.0);
    let lift = |e: &Endpoint| match e {
        Endpoint::Boundary(b) => Endpoint::Boundary(BoundaryComponent {
            param: b.param,
            orientation: b.orientation,
            mean_curvature: b.mean_curvature * curvature_scale,
        }),
        Endpoint::Focal(f) => Endpoint::Focal(FocalEndpoint {
            param: f.param,
            focal_dim: f.focal_dim + n_factor,
            vanishing_order: f.vanishing_order,
        }),
    };
    Ok(IsoparametricProfile {
        name: format!("{} x N^{n_factor}(s_h={s_h}, t={t})", base.name),
        dim,
        interval: base.interval,
        a: base.a.clone(),
        b: base.b.clone(),
        s: ScalarCurve::constant(s0 + s_h / t),
        left: lift(&base.left),
        right: lift(&base.right),
        weight_norm: WeightNorm {
            t_ref: base.weight_norm.t_ref,
            area: base.weight_norm.area * vol_scale,
        },
        weight: Some(base.weight_curve()?.scaled(vol_scale)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_examples() {
        let p = make_hemisphere(3).unwrap();
        assert!((p.s.eval(0.3) - 6.0).abs() < 1e-15);
        let eq = p.left.as_boundary().unwrap();
        assert_eq!(eq.mean_curvature, 0.0);

        let band = make_spherical_band(3, -0.5, 0.5).unwrap();
        assert_eq!(band.boundary_components().len(), 2);
        assert!(band.validate().is_usable());
        // Both caps are convex toward the outside.
        let h = 0.5f64 / (1.0 - 0.25f64).sqrt();
        assert!((band.left.as_boundary().unwrap().mean_curvature - h).abs() < 1e-14);
        assert!((band.right.as_boundary().unwrap().mean_curvature - h).abs() < 1e-14);

        assert!(matches!(
            make_spherical_band(3, 0.5, 0.5),
            Err(CoreError::InvalidProfile(_))
        ));
    }

    #[test]
    fn cylinder_demo_values() {
        let p = make_cylinder_demo();
        assert!((p.b.eval(0.0) - 1.0).abs() < 1e-15);
        assert_eq!(p.a.eval(0.0), 0.0);
        assert!(p.validate().is_usable());
        // Flat cylinder: every level circle is a geodesic.
        assert!(p.mean_curvature_of_level(0.3).unwrap().abs() < 1e-12);
    }

    #[test]
    fn product_scalar_curvature_and_k() {
        let hemi = make_hemisphere(2).unwrap();
        assert!((hemi.s.eval(0.2) - 2.0).abs() < 1e-15);
        let p1 = make_product(&hemi, 2, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(p1.dim, 4);
        assert!((p1.s.eval(0.3) - 4.0).abs() < 1e-12);
        let p2 = make_product(&hemi, 2, 2.0, 0.125, 1.0).unwrap();
        assert!((p2.s.eval(0.3) - 18.0).abs() < 1e-12);
        // Focal dimension lifts by the factor dimension, so k(f) >= 2.
        assert_eq!(p1.k_f(), 2);
        assert!(p1.validate().is_usable(), "{:?}", p1.validate().violations);
        // Exact difference identity s(product) - s(base) = s_h / t.
        let diff = p2.s.eval(0.0) - hemi.s.eval(0.0);
        assert_eq!(diff, 2.0 / 0.125);

        assert!(make_product(&hemi, 2, 2.0, 0.0, 1.0).is_err());
        assert!(make_product(&hemi, 2, 2.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn product_volume_scaling() {
        let hemi = make_hemisphere(2).unwrap();
        // Unit hemisphere S^2_+ has volume 2 pi.
        let v0 = hemi.volume().unwrap();
        assert!((v0 - 2.0 * std::f64::consts::PI).abs() < 1e-10);
        let p = make_product(&hemi, 2, 2.0, 4.0, 1.0).unwrap();
        assert!((p.volume().unwrap() - 4.0 * v0).abs() < 1e-9);
    }
}
