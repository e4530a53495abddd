//! Isoparametric profiles: the 1-D reduction of a compact manifold with
//! boundary carrying an isoparametric function.
//!
//! A profile stores the interval swept by the function value t, the data
//! a(t) (reduced Laplacian of the function, geometer sign convention
//! `lap = -div grad`), b(t) = |grad f|^2, the scalar curvature s_g(t), the
//! endpoint structure (regular boundary component or focal submanifold),
//! and a weight normalization pinning true geometric areas.
//!
//! Every radial computation in the toolkit reads only this data.

mod conformal;
mod factories;
mod io;

pub use conformal::{conformal_change, radial_boundary_operator, radial_conformal_laplacian};
pub use factories::{make_cylinder_demo, make_hemisphere, make_product, make_spherical_band};

use serde::{Deserialize, Serialize};

use crate::curve::ScalarCurve;
use crate::error::{CoreError, Result};
use crate::quad;

/// Reference-level normalization: the level set at `t_ref` has area `area`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightNorm {
    pub t_ref: f64,
    pub area: f64,
}

/// A regular boundary component sitting at an interval endpoint.
///
/// `orientation` is +1 when the outward normal of the manifold aligns with
/// the gradient of the isoparametric function (right endpoint) and -1
/// otherwise. `mean_curvature` is the normalized mean curvature (average of
/// principal curvatures) with respect to the outward normal, which is the
/// quantity entering the conformal boundary operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryComponent {
    pub param: f64,
    pub orientation: f64,
    pub mean_curvature: f64,
}

/// A focal endpoint: the level set degenerates to a submanifold of
/// dimension `focal_dim` and the reduced weight vanishes like
/// |t - param|^vanishing_order there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FocalEndpoint {
    pub param: f64,
    pub focal_dim: usize,
    pub vanishing_order: f64,
}

/// Endpoint classification of the profile interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Endpoint {
    Boundary(BoundaryComponent),
    Focal(FocalEndpoint),
}

impl Endpoint {
    pub fn param(&self) -> f64 {
        match self {
            Endpoint::Boundary(b) => b.param,
            Endpoint::Focal(f) => f.param,
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, Endpoint::Boundary(_))
    }

    pub fn as_boundary(&self) -> Option<&BoundaryComponent> {
        match self {
            Endpoint::Boundary(b) => Some(b),
            Endpoint::Focal(_) => None,
        }
    }

    pub fn as_focal(&self) -> Option<&FocalEndpoint> {
        match self {
            Endpoint::Focal(f) => Some(f),
            Endpoint::Boundary(_) => None,
        }
    }
}

/// Which interval end an endpoint sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// The 1-D profile of (M, g, f).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsoparametricProfile {
    pub name: String,
    /// Manifold dimension n.
    pub dim: usize,
    /// Parameter interval [t_a, t_b] (range of the isoparametric function).
    pub interval: (f64, f64),
    /// Reduced Laplacian: lap_g f = a(f), with lap = -div grad.
    pub a: ScalarCurve,
    /// Gradient norm squared: |grad f|^2 = b(f).
    pub b: ScalarCurve,
    /// Scalar curvature along levels, s_g(t).
    pub s: ScalarCurve,
    pub left: Endpoint,
    pub right: Endpoint,
    pub weight_norm: WeightNorm,
    /// Analytic weight when known (factories and conformal images keep it);
    /// otherwise reconstructed from the weight ODE on demand.
    pub weight: Option<ScalarCurve>,
}

/// Outcome of profile validation; usable iff no violations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_usable(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Admissible-exponent threshold of the subcritical gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    /// Condition (a): every finite exponent admissible.
    Unrestricted,
    /// Strict supremum of admissible exponents.
    Bound(f64),
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::Unrestricted => write!(f, "unrestricted"),
            Threshold::Bound(v) => write!(f, "{v}"),
        }
    }
}

/// Interior (full-measure) vs boundary (trace) functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuotientMode {
    Interior,
    Boundary,
}

impl std::fmt::Display for QuotientMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuotientMode::Interior => write!(f, "interior"),
            QuotientMode::Boundary => write!(f, "boundary"),
        }
    }
}

/// Supremum of exponents s for which the reduced Sobolev embedding into
/// L^s (interior) or the trace into L^s (boundary) stays compact, given
/// dimension n and minimal focal dimension k.
pub fn threshold_for(n: usize, k: usize, mode: QuotientMode) -> Threshold {
    assert!(n >= 3);
    if k + 2 >= n {
        return Threshold::Unrestricted;
    }
    let (nf, kf) = (n as f64, k as f64);
    match mode {
        QuotientMode::Interior => Threshold::Bound(2.0 * (nf - kf) / (nf - kf - 2.0)),
        QuotientMode::Boundary => Threshold::Bound(2.0 * (nf - kf - 1.0) / (nf - kf - 2.0)),
    }
}

impl IsoparametricProfile {
    pub fn length(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn endpoint(&self, side: Side) -> &Endpoint {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    /// Focal-dimension contribution of each endpoint: the focal dimension
    /// itself, or n - 1 for a regular boundary component (no focal set on
    /// that side).
    pub fn dims_for_k(&self) -> [usize; 2] {
        let contrib = |e: &Endpoint| match e {
            Endpoint::Focal(f) => f.focal_dim,
            Endpoint::Boundary(_) => self.dim - 1,
        };
        [contrib(&self.left), contrib(&self.right)]
    }

    /// Minimal focal dimension k(f).
    pub fn k_f(&self) -> usize {
        let [l, r] = self.dims_for_k();
        l.min(r)
    }

    pub fn boundary_components(&self) -> Vec<&BoundaryComponent> {
        [&self.left, &self.right]
            .iter()
            .filter_map(|e| e.as_boundary())
            .collect()
    }

    /// Derived weight vanishing order at a focal end, read off the reduced
    /// data: nu = sigma * a(t_f)/|b'(t_f)| - 1 with sigma = +1 at the right,
    /// -1 at the left endpoint. Returns None at a boundary component or when
    /// b' vanishes (degenerate vanishing).
    pub fn derived_vanishing_order(&self, side: Side) -> Option<f64> {
        let e = self.endpoint(side);
        e.as_focal()?;
        let t = e.param();
        let bp = self.b.deriv(t);
        let scale = self.curve_scale(&self.b);
        if bp.abs() < 1e-10 * scale.max(1.0) {
            return None;
        }
        let sigma = match side {
            Side::Left => -1.0,
            Side::Right => 1.0,
        };
        Some(sigma * self.a.eval(t) / bp.abs() - 1.0)
    }

    fn curve_scale(&self, c: &ScalarCurve) -> f64 {
        let (ta, tb) = self.interval;
        (0..33)
            .map(|i| c.eval(ta + (tb - ta) * i as f64 / 32.0).abs())
            .fold(0.0, f64::max)
    }

    /// Checks every structural invariant; the profile is usable iff the
    /// returned report is empty.
    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let (ta, tb) = self.interval;
        if !(tb > ta) {
            v.push(format!("interval [{ta}, {tb}] is empty or reversed"));
            return ValidationReport { violations: v };
        }
        if self.dim < 2 {
            v.push(format!("manifold dimension {} < 2", self.dim));
        }
        let width = tb - ta;
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * width.max(1.0);
        if !close(self.left.param(), ta) {
            v.push(format!(
                "left endpoint parameter {} does not match interval start {ta}",
                self.left.param()
            ));
        }
        if !close(self.right.param(), tb) {
            v.push(format!(
                "right endpoint parameter {} does not match interval end {tb}",
                self.right.param()
            ));
        }
        if !self.left.is_boundary() && !self.right.is_boundary() {
            v.push("no boundary component: both endpoints focal".into());
        }

        // Curve sanity over a dense interior sample.
        let samples = 1024;
        let mut b_min = f64::INFINITY;
        let mut finite = true;
        for i in 1..samples {
            let t = ta + width * i as f64 / samples as f64;
            let (av, bv, sv) = (self.a.eval(t), self.b.eval(t), self.s.eval(t));
            if !av.is_finite() || !bv.is_finite() || !sv.is_finite() {
                finite = false;
            }
            b_min = b_min.min(bv);
        }
        if !finite {
            v.push("a, b or s_g not finite on the interval".into());
        }
        if b_min <= 0.0 {
            v.push(format!(
                "b not positive on interior (min sampled value {b_min:.3e})"
            ));
        }

        let b_scale = self.curve_scale(&self.b).max(1e-300);
        for (side, e) in [(Side::Left, &self.left), (Side::Right, &self.right)] {
            let t = e.param();
            match e {
                Endpoint::Boundary(bc) => {
                    if self.b.eval(t) <= 0.0 {
                        v.push(format!(
                            "boundary component at t = {t} lies on a singular level (b <= 0)"
                        ));
                    }
                    let expect = if side == Side::Left { -1.0 } else { 1.0 };
                    if bc.orientation != expect {
                        v.push(format!(
                            "boundary orientation at t = {t} must be {expect}, got {}",
                            bc.orientation
                        ));
                    }
                    if !bc.mean_curvature.is_finite() {
                        v.push(format!("boundary mean curvature at t = {t} not finite"));
                    }
                }
                Endpoint::Focal(fe) => {
                    if self.b.eval(t).abs() > 1e-8 * b_scale {
                        v.push(format!(
                            "focal endpoint at t = {t} has b != 0 (b = {:.3e})",
                            self.b.eval(t)
                        ));
                    }
                    if self.dim >= 2 && fe.focal_dim + 2 > self.dim {
                        v.push(format!(
                            "focal dimension {} exceeds n - 2 = {}",
                            fe.focal_dim,
                            self.dim as i64 - 2
                        ));
                    }
                    if fe.vanishing_order <= -1.0 {
                        v.push(format!(
                            "vanishing order {} at t = {t} not integrable",
                            fe.vanishing_order
                        ));
                    }
                    match self.derived_vanishing_order(side) {
                        Some(nu) => {
                            if (nu - fe.vanishing_order).abs() > 0.05 * (1.0 + nu.abs()) {
                                v.push(format!(
                                    "vanishing order {} at t = {t} inconsistent with a/b data (derived {nu:.6})",
                                    fe.vanishing_order
                                ));
                            }
                        }
                        None => v.push(format!(
                            "b vanishes to order >= 2 at focal endpoint t = {t}"
                        )),
                    }
                }
            }
        }

        // Weight normalization.
        let wn = &self.weight_norm;
        if !(wn.area > 0.0) {
            v.push(format!("reference area {} not positive", wn.area));
        }
        if !(wn.t_ref > ta && wn.t_ref < tb) {
            v.push(format!(
                "reference level t_ref = {} not in the open interval",
                wn.t_ref
            ));
        } else if self.b.eval(wn.t_ref) <= 0.0 {
            v.push("reference level is singular (b <= 0 at t_ref)".into());
        }
        if let Some(w) = &self.weight {
            if wn.t_ref > ta && wn.t_ref < tb && self.b.eval(wn.t_ref) > 0.0 {
                let area = w.eval(wn.t_ref) * self.b.eval(wn.t_ref).sqrt();
                if (area - wn.area).abs() > 1e-6 * wn.area.abs().max(1.0) {
                    v.push(format!(
                        "stored weight disagrees with reference area: w*sqrt(b) = {area}, expected {}",
                        wn.area
                    ));
                }
            }
            for i in 1..64 {
                let t = ta + width * i as f64 / 64.0;
                if !(w.eval(t) > 0.0) {
                    v.push(format!("stored weight not positive at t = {t}"));
                    break;
                }
            }
        }

        ValidationReport { violations: v }
    }

    /// Errors with the violation list unless the profile is usable.
    pub fn require_usable(&self) -> Result<()> {
        let report = self.validate();
        if report.is_usable() {
            Ok(())
        } else {
            Err(CoreError::UnusableProfile(report.violations))
        }
    }

    /// Mean curvature (trace of the shape operator with respect to the unit
    /// normal grad f / |grad f|) of the regular level at t:
    /// (2a + b')/(2 sqrt(b)).
    pub fn mean_curvature_of_level(&self, t: f64) -> Result<f64> {
        let (ta, tb) = self.interval;
        let width = tb - ta;
        if t < ta - 1e-12 * width || t > tb + 1e-12 * width {
            return Err(CoreError::Domain(format!(
                "t = {t} outside interval [{ta}, {tb}]"
            )));
        }
        let bv = self.b.eval(t);
        let b_scale = self.curve_scale(&self.b).max(1e-300);
        if bv <= 1e-13 * b_scale {
            return Err(CoreError::SingularLevel { t });
        }
        Ok((2.0 * self.a.eval(t) + self.b.deriv(t)) / (2.0 * bv.sqrt()))
    }

    /// Geodesic distance between the levels at t1 and t2: the line integral
    /// of 1/sqrt(b). Focal endpoints of the profile are admissible as
    /// improper integration limits.
    pub fn geodesic_distance(&self, t1: f64, t2: f64) -> Result<f64> {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let (ta, tb) = self.interval;
        let width = tb - ta;
        if lo < ta - 1e-12 * width || hi > tb + 1e-12 * width {
            return Err(CoreError::Domain(format!(
                "levels [{lo}, {hi}] outside interval [{ta}, {tb}]"
            )));
        }
        if hi - lo < 1e-15 * width {
            return Ok(0.0);
        }
        let b_scale = self.curve_scale(&self.b).max(1e-300);
        // Interior singularity scan: b must stay positive strictly inside.
        for i in 1..512 {
            let t = lo + (hi - lo) * i as f64 / 512.0;
            if t > ta + 1e-12 * width && t < tb - 1e-12 * width {
                let bv = self.b.eval(t);
                if bv <= 1e-12 * b_scale {
                    return Err(CoreError::NonIntegrableSingularity { t });
                }
            }
        }
        let singular = |t: f64| self.b.eval(t).abs() <= 1e-10 * b_scale;
        let sing_lo = singular(lo);
        let sing_hi = singular(hi);
        // At a degenerate endpoint (b vanishing to order >= 2) the distance
        // integral diverges.
        for (flag, t) in [(sing_lo, lo), (sing_hi, hi)] {
            if flag && self.b.deriv(t).abs() < 1e-9 * b_scale.max(1.0) {
                return Err(CoreError::NonIntegrableSingularity { t });
            }
        }
        let b = &self.b;
        let value = quad::integrate_singular(
            |t| 1.0 / b.eval(t).max(0.0).sqrt().max(1e-300),
            lo,
            hi,
            sing_lo,
            sing_hi,
            1e-12,
        );
        Ok(value)
    }

    /// The weight curve used for all integrations: the stored analytic one
    /// when present, otherwise the ODE reconstruction.
    pub fn weight_curve(&self) -> Result<ScalarCurve> {
        match &self.weight {
            Some(w) => Ok(w.clone()),
            None => self.reconstruct_weight(),
        }
    }

    /// Reconstructs the pushforward density w from the self-adjointness
    /// ODE (b w)' = -a w, normalized so that w(t_ref) sqrt(b(t_ref)) equals
    /// the stored reference area. Singular endpoint factors |t - t_f|^nu are
    /// kept exact; only the smooth remainder is integrated and splined.
    pub fn reconstruct_weight(&self) -> Result<ScalarCurve> {
        self.require_usable()?;
        let (ta, tb) = self.interval;
        let nu_l = self.derived_vanishing_order(Side::Left);
        let nu_r = self.derived_vanishing_order(Side::Right);
        let a = &self.a;
        let b = &self.b;
        // Log-derivative of w with the focal poles removed.
        let g_smooth = move |t: f64| {
            let mut g = (a.eval(t) + b.deriv(t)) / b.eval(t);
            if let Some(nu) = nu_r {
                g -= nu / (tb - t);
            }
            if let Some(nu) = nu_l {
                g += nu / (t - ta);
            }
            g
        };
        let knots = 513;
        let mut ts = Vec::with_capacity(knots);
        let mut q = Vec::with_capacity(knots);
        let mut acc = 0.0;
        ts.push(ta);
        q.push(0.0);
        for i in 1..knots {
            let t0 = ta + (tb - ta) * (i - 1) as f64 / (knots - 1) as f64;
            let t1 = ta + (tb - ta) * i as f64 / (knots - 1) as f64;
            acc += quad::integrate(g_smooth, t0, t1, 1e-13);
            ts.push(t1);
            q.push(acc);
        }
        // w = C |t - t_f|^nu exp(-(Q(t) - Q(t_ref))).
        let t_ref = self.weight_norm.t_ref;
        let q_spline = crate::curve::CubicSpline::new(ts, q)?;
        let q_ref = q_spline.eval(t_ref);
        let mut log_ref = -0.0;
        if let Some(nu) = nu_r {
            log_ref += nu * (tb - t_ref).ln();
        }
        if let Some(nu) = nu_l {
            log_ref += nu * (t_ref - ta).ln();
        }
        let w_ref = self.weight_norm.area / self.b.eval(t_ref).sqrt();
        let c = w_ref.ln() - log_ref + q_ref;
        let mut factors = Vec::new();
        if let Some(nu) = nu_l {
            factors.push(ScalarCurve::PowAbs {
                coeff: 1.0,
                center: ta,
                expo: nu,
            });
        }
        if let Some(nu) = nu_r {
            factors.push(ScalarCurve::PowAbs {
                coeff: 1.0,
                center: tb,
                expo: nu,
            });
        }
        let qs: Vec<f64> = q_spline
            .abscissae()
            .iter()
            .map(|&t| c - q_spline.eval(t))
            .collect();
        let exponent =
            crate::curve::CubicSpline::new(q_spline.abscissae().to_vec(), qs)?;
        factors.push(ScalarCurve::Exp {
            inner: Box::new(ScalarCurve::Table { table: exponent }),
        });
        Ok(ScalarCurve::Product { factors })
    }

    /// Riemannian volume of M: the integral of w over the interval.
    pub fn volume(&self) -> Result<f64> {
        let w = self.weight_curve()?;
        let (ta, tb) = self.interval;
        Ok(quad::integrate_singular(
            |t| w.eval(t),
            ta,
            tb,
            !self.left.is_boundary(),
            !self.right.is_boundary(),
            1e-12,
        ))
    }

    /// Area of the level set at t: w(t) sqrt(b(t)).
    pub fn level_area(&self, t: f64) -> Result<f64> {
        let bv = self.b.eval(t);
        if bv <= 0.0 {
            return Err(CoreError::SingularLevel { t });
        }
        Ok(self.weight_curve()?.eval(t) * bv.sqrt())
    }

    /// Admissible-exponent threshold for this profile (condition (a) gives
    /// "unrestricted"; otherwise the strict supremum from k(f)).
    pub fn codim_threshold(&self, mode: QuotientMode) -> Result<Threshold> {
        if self.dim < 3 {
            return Err(CoreError::DimensionTooLow(self.dim));
        }
        Ok(threshold_for(self.dim, self.k_f(), mode))
    }

    /// Returns a copy with the weight (and reference area) scaled by kappa.
    /// Quotient values are covariant under this with exponent 1 - 2/s.
    pub fn with_weight_scaled(&self, kappa: f64) -> Result<IsoparametricProfile> {
        if !(kappa > 0.0) {
            return Err(CoreError::Domain("weight scale must be positive".into()));
        }
        let mut p = self.clone();
        p.weight = Some(self.weight_curve()?.scaled(kappa));
        p.weight_norm.area *= kappa;
        Ok(p)
    }

    /// Log-log fit of the reconstructed weight near a focal endpoint,
    /// used when a profile file omits the vanishing order.
    pub fn estimate_vanishing_order(&self, side: Side) -> Result<f64> {
        let (ta, tb) = self.interval;
        let width = tb - ta;
        let t_ref = self.weight_norm.t_ref;
        let a = &self.a;
        let b = &self.b;
        let g = move |t: f64| (a.eval(t) + b.deriv(t)) / b.eval(t);
        let mut pts = Vec::new();
        for k in 0..6 {
            let tau = width * 1e-2 * 0.5f64.powi(k);
            let t = match side {
                Side::Left => ta + tau,
                Side::Right => tb - tau,
            };
            let log_w = -quad::integrate(g, t_ref, t, 1e-11);
            pts.push((tau.ln(), log_w));
        }
        // Least-squares slope of log w against log tau.
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
    }
}

pub use io::{profile_from_json, profile_to_json};

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hemisphere_validates_with_focal_top() {
        let p = make_hemisphere(3).unwrap();
        let report = p.validate();
        assert!(report.is_usable(), "violations: {:?}", report.violations);
        assert!(p.left.is_boundary());
        let focal = p.right.as_focal().unwrap();
        assert_eq!(focal.focal_dim, 0);
        assert!((focal.vanishing_order - 0.5).abs() < 1e-12);
        assert_eq!(p.k_f(), 0);
    }

    #[test]
    fn negative_b_is_flagged() {
        let mut p = make_spherical_band(3, -0.5, 0.5).unwrap();
        // b(t) = t^2 - 1 is negative inside the band.
        p.b = ScalarCurve::poly(&[-1.0, 0.0, 1.0]);
        let report = p.validate();
        assert!(!report.is_usable());
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("b not positive")));
    }

    #[test]
    fn latitude_mean_curvature_matches_embedded_oracle() {
        // Trace of the shape operator of {x_4 = t} in S^3: (n-1) t / sqrt(1-t^2).
        let p = make_hemisphere(3).unwrap();
        for &t in &[0.0f64, 0.1, 0.25, 0.5, 0.75, 0.9] {
            let oracle = 2.0 * t / (1.0 - t * t).sqrt();
            let h = p.mean_curvature_of_level(t).unwrap();
            assert!((h - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()));
        }
        assert!(matches!(
            p.mean_curvature_of_level(1.0),
            Err(CoreError::SingularLevel { .. })
        ));
    }

    #[test]
    fn geodesic_distances_close_forms() {
        let p = make_hemisphere(3).unwrap();
        let d = p.geodesic_distance(0.0, 0.5).unwrap();
        assert!((d - PI / 6.0).abs() < 1e-10);
        let quarter = p.geodesic_distance(0.0, 1.0).unwrap();
        assert!((quarter - PI / 2.0).abs() < 1e-10);
        assert_eq!(p.geodesic_distance(0.3, 0.3).unwrap(), 0.0);
        // Additivity.
        let d13 = p.geodesic_distance(0.1, 0.9).unwrap();
        let d12 = p.geodesic_distance(0.1, 0.4).unwrap();
        let d23 = p.geodesic_distance(0.4, 0.9).unwrap();
        assert!((d13 - d12 - d23).abs() < 1e-10);
    }

    #[test]
    fn reconstructed_weight_matches_sphere_closed_form() {
        let mut p = make_hemisphere(3).unwrap();
        p.weight = None;
        let w = p.reconstruct_weight().unwrap();
        let oracle = |t: f64| 4.0 * PI * (1.0 - t * t).sqrt();
        for k in 0..200 {
            let t = 0.999 * k as f64 / 199.0;
            let rel = (w.eval(t) - oracle(t)).abs() / oracle(t);
            assert!(rel < 1e-10, "t = {t}: rel err {rel:.3e}");
        }
    }

    #[test]
    fn hemisphere_volume_is_half_three_sphere() {
        let p = make_hemisphere(3).unwrap();
        let vol = p.volume().unwrap();
        assert!((vol - PI * PI).abs() < 1e-10 * PI * PI);
        // Same through the reconstructed weight.
        let mut q = p.clone();
        q.weight = None;
        let vol = q.volume().unwrap();
        assert!((vol - PI * PI).abs() < 1e-9 * PI * PI);
    }

    #[test]
    fn level_areas_match_sphere_factory_oracle() {
        let p = make_hemisphere(3).unwrap();
        for k in 0..40 {
            let t = 0.98 * k as f64 / 39.0;
            let oracle = 4.0 * PI * (1.0 - t * t);
            let area = p.level_area(t).unwrap();
            assert!((area - oracle).abs() <= 1e-8 * oracle);
        }
    }

    #[test]
    fn cylinder_weight_is_inverse_sqrt_profile() {
        let p = make_cylinder_demo();
        let mut q = p.clone();
        q.weight = None;
        let w = q.reconstruct_weight().unwrap();
        for k in 0..50 {
            let t = -0.69 + 1.38 * k as f64 / 49.0;
            let oracle = 2.0 * PI / (1.0 - t * t).sqrt();
            assert!((w.eval(t) - oracle).abs() < 1e-9 * oracle);
            // Level length stays 2 pi.
            let area = p.level_area(t).unwrap();
            assert!((area - 2.0 * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn thresholds_follow_focal_codimension() {
        assert_eq!(
            threshold_for(4, 1, QuotientMode::Interior),
            Threshold::Bound(6.0)
        );
        assert_eq!(
            threshold_for(4, 1, QuotientMode::Boundary),
            Threshold::Bound(4.0)
        );
        assert_eq!(
            threshold_for(3, 1, QuotientMode::Interior),
            Threshold::Unrestricted
        );
        // Hemisphere in dimension 3 has k = 0.
        let p = make_hemisphere(3).unwrap();
        assert_eq!(
            p.codim_threshold(QuotientMode::Interior).unwrap(),
            Threshold::Bound(6.0)
        );
        assert_eq!(
            p.codim_threshold(QuotientMode::Boundary).unwrap(),
            Threshold::Bound(4.0)
        );
    }

    #[test]
    fn weight_scaling_scales_reference_area() {
        let p = make_hemisphere(3).unwrap();
        let q = p.with_weight_scaled(3.0).unwrap();
        assert!((q.volume().unwrap() - 3.0 * PI * PI).abs() < 1e-9);
        assert!(q.validate().is_usable());
    }

    #[test]
    fn vanishing_order_estimate_matches_analytic() {
        let p = make_hemisphere(3).unwrap();
        let nu = p.estimate_vanishing_order(Side::Right).unwrap();
        assert!((nu - 0.5).abs() < 5e-3, "estimated nu = {nu}");
    }
}
