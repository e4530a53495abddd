//! Bifurcation analysis of the normalized constant-curvature equation on
//! Riemannian products: bifurcation points of
//! F^s(u, lambda) = lap u + lambda (u - u^{s-1}) on the trivial axis
//! u = 1, the product bifurcation times t_i, branch continuation off the
//! axis, and certification of the resulting conformal metrics.

use serde::Serialize;

use crate::curve::{CubicSpline, ScalarCurve};
use crate::error::{CoreError, Result};
use crate::exponents::{a_n, p_n};
use crate::forms::{assemble, AssembledForms};
use crate::grid::{Grid, GridFunction};
use crate::linalg::{solve_arrow, Tridiag};
use crate::profile::{conformal_change, make_product, IsoparametricProfile};
use crate::spectra::{neumann_spectrum, SpectrumResult};

/// Product family (M x N, g + t h) described by the base profile of M and
/// the factor data of N.
#[derive(Debug, Clone)]
pub struct ProductSpec {
    pub base: IsoparametricProfile,
    pub factor_dim: usize,
    pub factor_scalar: f64,
    pub factor_volume: f64,
}

impl ProductSpec {
    pub fn new(
        base: IsoparametricProfile,
        factor_dim: usize,
        factor_scalar: f64,
    ) -> ProductSpec {
        ProductSpec {
            base,
            factor_dim,
            factor_scalar,
            factor_volume: 1.0,
        }
    }

    /// Total dimension m + n of the product.
    pub fn total_dim(&self) -> usize {
        self.base.dim + self.factor_dim
    }

    /// Base scalar curvature (must be constant for products).
    pub fn base_scalar(&self) -> f64 {
        let (ta, tb) = self.base.interval;
        self.base.s.eval(0.5 * (ta + tb))
    }

    /// The normalized equation parameter lambda(t) = s_{g(t)} / a_{m+n}.
    pub fn lambda_of_t(&self, t: f64) -> f64 {
        (self.base_scalar() + self.factor_scalar / t) / a_n(self.total_dim())
    }

    /// Inverse of `lambda_of_t`; errors when lambda is at or below the
    /// infimum s_g / a_{m+n} of the parameter range.
    pub fn t_of_lambda(&self, lambda: f64) -> Result<f64> {
        let floor = self.base_scalar() / a_n(self.total_dim());
        if lambda <= floor {
            return Err(CoreError::Domain(format!(
                "lambda = {lambda} outside the product parameter range (> {floor})"
            )));
        }
        Ok(self.factor_scalar / (a_n(self.total_dim()) * lambda - self.base_scalar()))
    }

    /// Product profile at scale t.
    pub fn profile_at(&self, t: f64) -> Result<IsoparametricProfile> {
        make_product(
            &self.base,
            self.factor_dim,
            self.factor_scalar,
            t,
            self.factor_volume,
        )
    }
}

/// A bifurcation point on the trivial axis.
#[derive(Debug, Clone, Serialize)]
pub struct BifurcationPoint {
    /// Eigenvalue index (i >= 1).
    pub index: usize,
    pub mu: f64,
    /// lambda_i = mu_i / (s - 2).
    pub lambda: f64,
}

/// Bifurcation points of F^s on a Neumann-type profile: the trivial zero
/// (1, lambda) bifurcates exactly at lambda = mu_i / (s - 2), i >= 1.
pub fn bifurcation_points(
    profile: &IsoparametricProfile,
    grid: &Grid,
    s: f64,
    count: usize,
) -> Result<Vec<BifurcationPoint>> {
    if !(s > 2.0) {
        return Err(CoreError::Domain(format!(
            "bifurcation needs s > 2, got s = {s}"
        )));
    }
    let spectrum = neumann_spectrum(profile, grid, count + 1)?;
    Ok(spectrum.eigenvalues[1..]
        .iter()
        .enumerate()
        .map(|(k, &mu)| BifurcationPoint {
            index: k + 1,
            mu,
            lambda: mu / (s - 2.0),
        })
        .collect())
}

/// One product bifurcation time.
#[derive(Debug, Clone, Serialize)]
pub struct BifurcationTime {
    /// Index into the supplied eigenvalue list.
    pub index: usize,
    pub mu: f64,
    /// t_i = s_h / (mu_i (m + n - 1) - s_g).
    pub t: f64,
    /// lambda(t_i), which satisfies lambda (p_{m+n} - 2) = mu_i.
    pub lambda: f64,
}

/// Product bifurcation times from a list of radial Neumann eigenvalues of
/// the base. Nonpositive times are dropped; near-resonant eigenvalues
/// (mu_i (m+n-1) = s_g) are excluded with a notice.
#[derive(Debug, Clone, Serialize)]
pub struct BifurcationTimes {
    pub times: Vec<BifurcationTime>,
    pub skipped: Vec<String>,
}

pub fn product_bifurcation_times(
    m_dim: usize,
    s_g: f64,
    s_h: f64,
    n_factor: usize,
    mus: &[f64],
) -> Result<BifurcationTimes> {
    if !(s_g > 0.0) || !(s_h > 0.0) {
        return Err(CoreError::Domain(
            "product bifurcation needs positive scalar curvatures".into(),
        ));
    }
    let total = m_dim + n_factor;
    let an = a_n(total);
    let p = p_n(total);
    let mut times = Vec::new();
    let mut skipped = Vec::new();
    for (i, &mu) in mus.iter().enumerate() {
        let denom = mu * (total as f64 - 1.0) - s_g;
        if denom.abs() < 1e-9 * (1.0 + s_g.abs()) {
            skipped.push(format!(
                "mu_{i} = {mu} resonant: mu (m+n-1) = s_g, no bifurcation time"
            ));
            continue;
        }
        let t = s_h / denom;
        if t <= 0.0 {
            continue;
        }
        let lambda = (s_g + s_h / t) / an;
        debug_assert!((lambda * (p - 2.0) - mu).abs() <= 1e-12 * (1.0 + mu.abs()));
        times.push(BifurcationTime {
            index: i,
            mu,
            t,
            lambda,
        });
    }
    times.sort_by(|l, r| r.t.partial_cmp(&l.t).unwrap());
    Ok(BifurcationTimes { times, skipped })
}

/// A continuation sample on a nontrivial branch.
#[derive(Debug, Clone, Serialize)]
pub struct BranchSample {
    /// Branch parameter: the weight-inner-product component of u - 1 along
    /// the kick eigenfunction.
    pub r: f64,
    pub u: GridFunction,
    /// beta(r), the equation parameter along the branch.
    pub lambda: f64,
    /// Weighted RMS norm of the discretized F^s(u, lambda).
    pub residual: f64,
    /// Sup-norm distance to the trivial solution.
    pub distance_to_trivial: f64,
}

/// Continuation output: the samples plus a diagnostic when the branch had
/// to be truncated.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub index: usize,
    pub mu: f64,
    pub lambda_critical: f64,
    /// Sup norm of the kick eigenfunction (tangency reference).
    pub eigenfunction_sup: f64,
    pub samples: Vec<BranchSample>,
    pub truncated: Option<String>,
}

/// Discretized F^s and its weighted RMS residual.
fn branch_residual(
    a_raw: &Tridiag,
    weights: &[f64],
    u: &[f64],
    lambda: f64,
    s: f64,
) -> f64 {
    let au = a_raw.apply(u);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..u.len() {
        let f = au[i] / weights[i] + lambda * (u[i] - pow_odd(u[i], s - 1.0));
        num += weights[i] * f * f;
        den += weights[i];
    }
    (num / den).sqrt()
}

fn pow_odd(x: f64, p: f64) -> f64 {
    x.signum() * x.abs().powf(p)
}

/// Newton corrector for the extended system
/// [W^{-1} A u + lambda (u - u^{s-1}) = 0, <u - 1, v>_W = r].
fn branch_corrector(
    a_raw: &Tridiag,
    weights: &[f64],
    v: &[f64],
    s: f64,
    r_target: f64,
    u0: &[f64],
    lambda0: f64,
) -> Option<(Vec<f64>, f64)> {
    let m = weights.len();
    let mut u = u0.to_vec();
    let mut lambda = lambda0;
    let wscale: f64 = weights.iter().sum();
    for _ in 0..60 {
        let au = a_raw.apply(&u);
        let mut rows = vec![0.0; m];
        let mut worst = 0.0f64;
        for i in 0..m {
            rows[i] = au[i] + lambda * weights[i] * (u[i] - pow_odd(u[i], s - 1.0));
            worst = worst.max(rows[i].abs() / weights[i]);
        }
        let cons: f64 = (0..m)
            .map(|i| weights[i] * v[i] * (u[i] - 1.0))
            .sum::<f64>()
            - r_target;
        if worst <= 1e-12 && cons.abs() <= 1e-13 * (1.0 + r_target.abs()) {
            return Some((u, lambda));
        }
        let mut jac = a_raw.clone();
        for i in 0..m {
            jac.diag[i] +=
                lambda * weights[i] * (1.0 - (s - 1.0) * u[i].abs().powf(s - 2.0));
        }
        let col: Vec<f64> = (0..m)
            .map(|i| weights[i] * (u[i] - pow_odd(u[i], s - 1.0)))
            .collect();
        let row: Vec<f64> = (0..m).map(|i| weights[i] * v[i]).collect();
        let mut rhs: Vec<f64> = rows.iter().map(|v| -v).collect();
        rhs.push(-cons);
        let delta = solve_arrow(&jac, &col, &row, 0.0, &rhs)?;
        let step: f64 = delta[..m]
            .iter()
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
            / wscale.sqrt().max(1.0);
        for i in 0..m {
            u[i] += delta[i];
        }
        lambda += delta[m];
        if !lambda.is_finite() || u.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if step < 1e-16 && worst > 1e-10 {
            return None;
        }
    }
    None
}

/// Continues the i-th nontrivial branch of F^s off the trivial axis at
/// lambda_i = mu_i / (s - 2), sampling at uniform branch parameters
/// r_j = j r_max / steps. The kick direction is the weight-normalized i-th
/// Neumann eigenfunction; the corrector solves the discretized equation
/// with the fixed-component constraint, and failed steps are bisected
/// before the branch is truncated with a diagnostic.
pub fn continue_branch(
    product: &ProductSpec,
    grid: &Grid,
    s: f64,
    index: usize,
    r_max: f64,
    steps: usize,
) -> Result<Branch> {
    if !(s > 2.0) {
        return Err(CoreError::Domain(format!(
            "continuation needs s > 2, got s = {s}"
        )));
    }
    if index == 0 {
        return Err(CoreError::Domain(
            "index 0 is the trivial constant mode; branches need i >= 1".into(),
        ));
    }
    if steps == 0 || !(r_max > 0.0) {
        return Err(CoreError::Domain(
            "continuation needs r_max > 0 and steps >= 1".into(),
        ));
    }
    let profile = product.profile_at(1.0)?;
    let forms = assemble(&profile, grid)?;
    let spectrum = neumann_spectrum(&profile, grid, index + 2)?;
    kernel_simplicity_check(&spectrum, index)?;
    let mu = spectrum.eigenvalues[index];
    let lambda_crit = mu / (s - 2.0);
    let (a_raw, weights) = forms.neumann_pencil();
    // Weight-normalize the eigenfunction.
    let mut v: Vec<f64> = spectrum.eigenfunctions[index].values.clone();
    let vnorm: f64 = v
        .iter()
        .zip(&weights)
        .map(|(x, w)| w * x * x)
        .sum::<f64>()
        .sqrt();
    for x in &mut v {
        *x /= vnorm;
    }
    let v_sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let m = weights.len();
    let mut samples: Vec<BranchSample> = Vec::with_capacity(steps);
    let mut truncated = None;
    // Ladder of requested branch parameters, plus a small internal kick
    // to leave the axis inside its local neighbourhood.
    let r0 = (1e-3 / v_sup).min(r_max / steps as f64);
    let mut prev: (f64, Vec<f64>, f64) = (0.0, vec![1.0; m], lambda_crit);
    let mut prev2: Option<(f64, Vec<f64>, f64)> = None;
    let mut ladder: Vec<f64> = vec![r0];
    for j in 1..=steps {
        let r = r_max * j as f64 / steps as f64;
        if r > r0 * 1.0001 {
            ladder.push(r);
        }
    }

    'ladder: for &r_req in &ladder {
        // Bisect toward r_req on failure.
        let mut pending = vec![r_req];
        let mut depth = 0;
        while let Some(r) = pending.pop() {
            let (u_pred, l_pred) = match &prev2 {
                Some((r2, u2, l2)) if (prev.0 - r2).abs() > 1e-14 => {
                    let w = (r - prev.0) / (prev.0 - r2);
                    let u: Vec<f64> = (0..m)
                        .map(|i| prev.1[i] + w * (prev.1[i] - u2[i]))
                        .collect();
                    (u, prev.2 + w * (prev.2 - l2))
                }
                _ => (
                    (0..m).map(|i| 1.0 + r * v[i]).collect::<Vec<f64>>(),
                    lambda_crit,
                ),
            };
            match branch_corrector(&a_raw, &weights, &v, s, r, &u_pred, l_pred) {
                Some((u, lambda)) => {
                    if u.iter().any(|&x| x <= 0.0) {
                        truncated = Some(format!(
                            "positivity lost at r = {r}; branch truncated"
                        ));
                        break 'ladder;
                    }
                    prev2 = Some(std::mem::replace(
                        &mut prev,
                        (r, u.clone(), lambda),
                    ));
                    if (r - r_req).abs() < 1e-14 * (1.0 + r_req) {
                        let residual = branch_residual(&a_raw, &weights, &u, lambda, s);
                        let gf = unpack_neumann(&forms, &u);
                        let distance = {
                            let mut d = (gf.trace_left - 1.0f64).abs();
                            d = d.max((gf.trace_right - 1.0).abs());
                            for x in &gf.values {
                                d = d.max((x - 1.0).abs());
                            }
                            d
                        };
                        samples.push(BranchSample {
                            r,
                            u: gf,
                            lambda,
                            residual,
                            distance_to_trivial: distance,
                        });
                    }
                    // Continue toward the requested target if this was a
                    // bisection waypoint.
                    if (r - r_req).abs() >= 1e-14 * (1.0 + r_req) {
                        pending.push(r_req);
                    }
                }
                None => {
                    depth += 1;
                    if depth > 10 {
                        truncated = Some(format!(
                            "corrector failed near r = {r} after step halving"
                        ));
                        break 'ladder;
                    }
                    pending.push(r);
                    pending.push(0.5 * (prev.0 + r));
                }
            }
        }
    }
    Ok(Branch {
        index,
        mu,
        lambda_critical: lambda_crit,
        eigenfunction_sup: v_sup,
        samples,
        truncated,
    })
}

fn kernel_simplicity_check(spectrum: &SpectrumResult, index: usize) -> Result<()> {
    let mu = spectrum.eigenvalues[index];
    let mut gap = f64::INFINITY;
    if index > 0 {
        gap = gap.min(mu - spectrum.eigenvalues[index - 1]);
    }
    if index + 1 < spectrum.eigenvalues.len() {
        gap = gap.min(spectrum.eigenvalues[index + 1] - mu);
    }
    if gap <= 1e-6 * (1.0 + mu.abs()) {
        return Err(CoreError::SolverFailure(format!(
            "eigenvalue mu_{index} = {mu} not numerically simple (gap {gap:.3e})"
        )));
    }
    Ok(())
}

fn unpack_neumann(forms: &AssembledForms, u: &[f64]) -> GridFunction {
    GridFunction {
        values: u.to_vec(),
        trace_left: forms
            .grid
            .extrapolate_trace(u, crate::profile::Side::Left),
        trace_right: forms
            .grid
            .extrapolate_trace(u, crate::profile::Side::Right),
    }
}

/// Exact vanishing of the discretized F^s on the trivial axis: the
/// residual of (1, lambda), which the flux discretization annihilates
/// identically.
pub fn trivial_axis_residual(
    product: &ProductSpec,
    grid: &Grid,
    s: f64,
    lambda: f64,
) -> Result<f64> {
    let profile = product.profile_at(1.0)?;
    let forms = assemble(&profile, grid)?;
    let (a_raw, weights) = forms.neumann_pencil();
    let u = vec![1.0; weights.len()];
    Ok(branch_residual(&a_raw, &weights, &u, lambda, s))
}

/// Certification of the conformal metric built from a branch sample.
#[derive(Debug, Clone, Serialize)]
pub struct BranchCertificate {
    /// Product scale recovered from the sample parameter.
    pub gamma: f64,
    /// Reference bifurcation time and the gap |gamma - t_i|.
    pub t_reference: f64,
    pub gamma_gap: f64,
    /// Scalar curvature of the conformal metric and its max relative
    /// deviation from constancy.
    pub scalar_curvature: f64,
    pub scalar_deviation_rel: f64,
    /// Largest boundary mean curvature magnitude (minimality check).
    pub boundary_h_max: f64,
    /// Distance to the trivial solution exceeds 10x the residual: the
    /// metric is a genuinely new solution.
    pub nontrivial: bool,
    /// Set when the sample is the trivial product metric itself.
    pub trivial_product_metric: bool,
    pub residual: f64,
}

/// Builds the conformal metric u^{p-2} g(gamma) from a branch sample,
/// solving gamma from the sample parameter, and certifies constant scalar
/// curvature, minimal boundary and nontriviality.
pub fn branch_to_metric(
    product: &ProductSpec,
    grid: &Grid,
    sample: &BranchSample,
    t_reference: f64,
) -> Result<BranchCertificate> {
    let gamma = product.t_of_lambda(sample.lambda)?;
    let profile = product.profile_at(gamma)?;
    let forms = assemble(&profile, grid)?;
    let total = product.total_dim();
    let an = a_n(total);
    let p = p_n(total);
    let s_gamma = product.base_scalar() + product.factor_scalar / gamma;

    // Discrete route: the same flux operator the branch solved, so the
    // certificate measures exactly the constancy of u^{1-p} L_g u.
    let (a_raw, weights) = forms.neumann_pencil();
    let au = a_raw.apply(&sample.u.values);
    let mut dev = 0.0f64;
    for i in 0..weights.len() {
        let lu = an * au[i] / weights[i] + s_gamma * sample.u.values[i];
        let s_val = sample.u.values[i].powf(1.0 - p) * lu;
        dev = dev.max((s_val - s_gamma).abs());
    }
    let scalar_deviation_rel = dev / s_gamma.abs().max(1e-300);

    // Boundary minimality via the conformal image of the spline of u.
    let u_curve = sample_to_curve(&forms, &sample.u)?;
    let image = conformal_change(&profile, &u_curve)?;
    let boundary_h_max = image
        .boundary_components()
        .iter()
        .map(|b| b.mean_curvature.abs())
        .fold(0.0, f64::max);

    let nontrivial = sample.distance_to_trivial > 10.0 * sample.residual;
    Ok(BranchCertificate {
        gamma,
        t_reference,
        gamma_gap: (gamma - t_reference).abs(),
        scalar_curvature: s_gamma,
        scalar_deviation_rel,
        boundary_h_max,
        nontrivial,
        trivial_product_metric: !nontrivial,
        residual: sample.residual,
    })
}

fn sample_to_curve(forms: &AssembledForms, u: &GridFunction) -> Result<ScalarCurve> {
    let (ta, tb) = forms.grid.interval();
    let mut ts = Vec::with_capacity(u.values.len() + 2);
    let mut vs = Vec::with_capacity(u.values.len() + 2);
    ts.push(ta);
    vs.push(u.trace_left);
    for (t, v) in forms.grid.centers.iter().zip(&u.values) {
        ts.push(*t);
        vs.push(*v);
    }
    ts.push(tb);
    vs.push(u.trace_right);
    Ok(ScalarCurve::Table {
        table: CubicSpline::new(ts, vs)?,
    })
}
