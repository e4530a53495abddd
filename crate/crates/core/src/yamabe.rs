//! Subcritical quotient minimization over radial functions: the energy
//! quotients J^s (interior normalization) and Q^s (boundary trace
//! normalization), their Euler–Lagrange residuals, an independent shooting
//! solver for the radial boundary value problem, and the two canonical
//! constant-curvature conformal metrics.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::{CubicSpline, ScalarCurve};
use crate::error::{CoreError, Result};
use crate::exponents::{p_boundary, p_n};
use crate::forms::{assemble, AssembledForms};
use crate::grid::{Grid, GridFunction};
use crate::linalg::solve_arrow;
use crate::ode::{integrate_to_targets, OdeOptions};
use crate::profile::{
    conformal_change, IsoparametricProfile, QuotientMode, Side, Threshold,
};
use crate::spectra::conformal_eigen_probe;

/// Verdict of the subcritical admissibility gate.
#[derive(Debug, Clone, Serialize)]
pub struct SubcriticalVerdict {
    pub s: f64,
    pub mode: QuotientMode,
    pub admissible: bool,
    pub threshold: Threshold,
}

/// Admissibility of the exponent s for this profile and functional: either
/// the focal codimension is small enough that every exponent embeds, or s
/// must lie strictly below the threshold.
pub fn check_subcritical(
    profile: &IsoparametricProfile,
    s: f64,
    mode: QuotientMode,
) -> Result<SubcriticalVerdict> {
    let threshold = profile.codim_threshold(mode)?;
    let admissible = match threshold {
        Threshold::Unrestricted => true,
        Threshold::Bound(bound) => s < bound,
    };
    Ok(SubcriticalVerdict {
        s,
        mode,
        admissible,
        threshold,
    })
}

/// Initialization of the minimization flow.
#[derive(Debug, Clone)]
pub enum Init {
    /// The constant function 1.
    Constant,
    /// Positive random perturbation of the constant, seeded.
    Random(u64),
    /// Caller-supplied start.
    Given(GridFunction),
}

/// Solver controls (defaults match the documented tolerances).
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol_interior: f64,
    pub tol_boundary: f64,
    pub max_iterations: usize,
    pub init: Init,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_interior: 1e-6,
            tol_boundary: 1e-8,
            max_iterations: 100_000,
            init: Init::Constant,
        }
    }
}

/// One accepted flow step in the iteration log.
#[derive(Debug, Clone, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    pub value: f64,
    pub residual: f64,
}

/// Minimization outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Strictly positive minimizer with unit constraint norm.
    pub minimizer: GridFunction,
    /// The quotient value (the discrete infimum found).
    pub value: f64,
    /// Euler–Lagrange constant under the unit-norm convention:
    /// equal to `value` in interior mode and value / (2(n-1)) in boundary
    /// mode.
    pub lagrange_c: f64,
    pub residual_interior: f64,
    pub residual_boundary: f64,
    pub iterations: Vec<IterRecord>,
    pub flow_iterations: usize,
    pub newton_iterations: usize,
    pub s: f64,
    pub mode: QuotientMode,
}

/// Euler–Lagrange residuals of a candidate (phi, c).
#[derive(Debug, Clone, Serialize)]
pub struct ElResidual {
    /// Weighted 2-norm of the interior equation relative to the weighted
    /// norm of phi.
    pub interior: f64,
    /// Per-component boundary condition residuals (left-to-right order).
    pub boundary: Vec<f64>,
}

impl ElResidual {
    pub fn boundary_max(&self) -> f64 {
        self.boundary.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The nonlinear right-hand side q(x) with T x = c q(x) at stationarity.
fn nonlinear_rhs(forms: &AssembledForms, x: &[f64], s: f64, mode: QuotientMode) -> Vec<f64> {
    let m = forms.cells();
    let bf = forms.boundary_factor();
    let mut q = vec![0.0; forms.dof_count()];
    match mode {
        QuotientMode::Interior => {
            for i in 0..m {
                let xi = x[forms.cell_dof(i)];
                q[forms.cell_dof(i)] = forms.grid.cell_weights[i] * signed_pow(xi, s - 1.0);
            }
        }
        QuotientMode::Boundary => {
            if let Some(b) = &forms.left {
                q[0] = bf * b.area * signed_pow(x[0], s - 1.0);
            }
            if let Some(b) = &forms.right {
                let last = forms.dof_count() - 1;
                q[last] = bf * b.area * signed_pow(x[last], s - 1.0);
            }
        }
    }
    q
}

/// Odd power extension sign(x) |x|^p (the quotients are even in phi, and
/// the flow projects onto positives anyway).
fn signed_pow(x: f64, p: f64) -> f64 {
    x.signum() * x.abs().powf(p)
}

/// Constraint integral N(x) (interior or boundary s-norm to the s).
fn constraint_norm(forms: &AssembledForms, f: &GridFunction, s: f64, mode: QuotientMode) -> f64 {
    match mode {
        QuotientMode::Interior => forms.interior_lp(f, s),
        QuotientMode::Boundary => forms.boundary_lp(f, s),
    }
}

/// Discrete Euler–Lagrange residuals of the pair (phi, c) for the interior
/// problem a_n lap u + s_g u = c u^{s-1} with the homogeneous Robin
/// condition (interior mode), or the harmonic problem with boundary
/// condition B_g u = c u^{s-1} (boundary mode). Uses the same flux
/// operators as the assembled energy, so a converged discrete minimizer
/// has residuals at solver tolerance.
pub fn el_residual(
    profile: &IsoparametricProfile,
    grid: &Grid,
    phi: &GridFunction,
    s: f64,
    c: f64,
    mode: QuotientMode,
) -> Result<ElResidual> {
    let forms = assemble(profile, grid)?;
    Ok(el_residual_on(&forms, phi, s, c, mode))
}

pub(crate) fn el_residual_on(
    forms: &AssembledForms,
    phi: &GridFunction,
    s: f64,
    c: f64,
    mode: QuotientMode,
) -> ElResidual {
    let t = forms.energy_tridiag().expect("dimension checked upstream");
    let x = forms.pack(phi);
    let y = t.apply(&x);
    let q = nonlinear_rhs(forms, &x, s, mode);
    let m = forms.cells();
    let bf = forms.boundary_factor();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..m {
        let dof = forms.cell_dof(i);
        let w = forms.grid.cell_weights[i];
        let r = (y[dof] - c * q[dof]) / w;
        num += w * r * r;
        den += w * x[dof] * x[dof];
    }
    let interior = (num / den.max(1e-300)).sqrt();
    let mut boundary = Vec::new();
    if forms.left.is_some() {
        let b = forms.left.as_ref().unwrap();
        boundary.push((y[0] - c * q[0]) / (bf * b.area));
    }
    if forms.right.is_some() {
        let b = forms.right.as_ref().unwrap();
        let last = forms.dof_count() - 1;
        boundary.push((y[last] - c * q[last]) / (bf * b.area));
    }
    ElResidual { interior, boundary }
}

/// Gradient of the quotient J^s (or Q^s) at phi in the extended DOF space.
/// Exposed so the descent direction can be checked against finite
/// differences of the discrete quotient.
pub fn quotient_gradient(
    forms: &AssembledForms,
    phi: &GridFunction,
    s: f64,
    mode: QuotientMode,
) -> Result<Vec<f64>> {
    let t = forms.energy_tridiag()?;
    let x = forms.pack(phi);
    let tx = t.apply(&x);
    let e: f64 = x.iter().zip(&tx).map(|(a, b)| a * b).sum();
    let n = constraint_norm(forms, phi, s, mode);
    if n <= 0.0 {
        return Err(CoreError::ZeroDenominator("quotient gradient"));
    }
    let q = nonlinear_rhs(forms, &x, s, mode);
    let scale = n.powf(-2.0 / s);
    Ok((0..x.len())
        .map(|i| scale * (2.0 * tx[i] - (2.0 * e / n) * q[i]))
        .collect())
}

fn normalize_constraint(
    forms: &AssembledForms,
    f: &mut GridFunction,
    s: f64,
    mode: QuotientMode,
) -> Result<()> {
    let n = constraint_norm(forms, f, s, mode);
    if n <= 0.0 || !n.is_finite() {
        return Err(CoreError::ZeroDenominator("constraint normalization"));
    }
    f.scale(n.powf(-1.0 / s));
    Ok(())
}

/// Shift making the energy Hessian positive definite for preconditioning.
fn spd_shift(forms: &AssembledForms) -> f64 {
    let worst_cell = forms
        .cell_curvature
        .iter()
        .zip(&forms.grid.cell_weights)
        .map(|(s, w)| s / w)
        .fold(f64::INFINITY, f64::min);
    1.0 + (-worst_cell).max(0.0)
}

fn build_initial(forms: &AssembledForms, init: &Init) -> GridFunction {
    match init {
        Init::Constant => GridFunction::constant(&forms.grid, 1.0),
        Init::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut f = GridFunction::constant(&forms.grid, 1.0);
            for v in &mut f.values {
                *v = 0.25 + 1.5 * rng.gen::<f64>();
            }
            f.trace_left = 0.25 + 1.5 * rng.gen::<f64>();
            f.trace_right = 0.25 + 1.5 * rng.gen::<f64>();
            f
        }
        Init::Given(f) => f.clone(),
    }
}

/// Minimizes the quotient by a preconditioned, positivity-projected
/// normalized gradient flow with Armijo backtracking, then polishes the
/// stationarity system with a bordered Newton iteration.
///
/// Boundary mode refuses to run when the Dirichlet probe is negative
/// (the quotient may then be unbounded below).
pub fn minimize_quotient(
    profile: &IsoparametricProfile,
    grid: &Grid,
    s: f64,
    mode: QuotientMode,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let verdict = check_subcritical(profile, s, mode)?;
    if !verdict.admissible {
        return Err(CoreError::NotAdmissible {
            s,
            mode: match mode {
                QuotientMode::Interior => "interior",
                QuotientMode::Boundary => "boundary",
            },
            threshold: verdict.threshold.to_string(),
        });
    }
    if !(s >= 1.0) {
        return Err(CoreError::Domain(format!("exponent s = {s} must be >= 1")));
    }
    if mode == QuotientMode::Boundary {
        let probe = conformal_eigen_probe(profile, grid)?;
        if probe.lambda_dirichlet < 0.0 {
            return Err(CoreError::Domain(
                "boundary quotient may be unbounded below (negative Dirichlet probe); refusing"
                    .into(),
            ));
        }
    }
    let forms = assemble(profile, grid)?;
    let t = forms.energy_tridiag()?;

    // SPD preconditioner: energy Hessian shifted by the plain mass.
    let mut precond = t.clone();
    let sigma = spd_shift(&forms);
    for i in 0..forms.cells() {
        precond.diag[forms.cell_dof(i)] += sigma * forms.grid.cell_weights[i];
    }
    let precond_lu = precond.lu();

    let mut phi = build_initial(&forms, &opts.init).abs();
    normalize_constraint(&forms, &mut phi, s, mode)?;
    let mut value = forms.quotient(&phi, s, mode)?;
    let mut history = Vec::new();
    let mut flow_iterations = 0;
    let flow_budget = opts.max_iterations.min(600);

    let residual_of = |f: &GridFunction, val: f64| -> ElResidual {
        let c = match mode {
            QuotientMode::Interior => val,
            QuotientMode::Boundary => val / forms.boundary_factor(),
        };
        el_residual_on(&forms, f, s, c, mode)
    };

    let mut res = residual_of(&phi, value);
    history.push(IterRecord {
        iter: 0,
        value,
        residual: res.interior,
    });

    while flow_iterations < flow_budget
        && !(res.interior <= opts.tol_interior && res.boundary_max() <= opts.tol_boundary)
    {
        flow_iterations += 1;
        let grad = quotient_gradient(&forms, &phi, s, mode)?;
        let dir: Vec<f64> = precond_lu.solve(&grad).iter().map(|v| -v).collect();
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if slope >= 0.0 {
            break; // preconditioner lost descent; Newton takes over
        }
        let x = forms.pack(&phi);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = x
                .iter()
                .zip(&dir)
                .map(|(xi, di)| (xi + alpha * di).abs())
                .collect();
            let mut cand_f = forms.unpack(&cand);
            if normalize_constraint(&forms, &mut cand_f, s, mode).is_err() {
                alpha *= 0.5;
                continue;
            }
            let cand_v = forms.quotient(&cand_f, s, mode)?;
            if cand_v <= value + 1e-4 * alpha * slope {
                phi = cand_f;
                value = cand_v;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        res = residual_of(&phi, value);
        history.push(IterRecord {
            iter: flow_iterations,
            value,
            residual: res.interior,
        });
        if history.len() >= 2 {
            let prev = history[history.len() - 2].value;
            if (prev - value).abs() <= 1e-14 * value.abs().max(1.0) {
                break;
            }
        }
    }

    // Bordered Newton polish of the stationarity system T x = c q(x),
    // N(x) = 1.
    let mut x = forms.pack(&phi);
    let mut c = match mode {
        QuotientMode::Interior => value,
        QuotientMode::Boundary => value / forms.boundary_factor(),
    };
    let mut newton_iterations = 0;
    let target_int = (opts.tol_interior * 1e-4).max(1e-13);
    for _ in 0..60 {
        let f = forms.unpack(&x);
        let r = el_residual_on(&forms, &f, s, c, mode);
        if r.interior <= target_int && r.boundary_max() <= (opts.tol_boundary * 1e-3).max(1e-13)
        {
            break;
        }
        newton_iterations += 1;
        let q = nonlinear_rhs(&forms, &x, s, mode);
        let tx = t.apply(&x);
        let mut residual_vec: Vec<f64> = (0..x.len()).map(|i| tx[i] - c * q[i]).collect();
        let n_val = constraint_norm(&forms, &f, s, mode) - 1.0;
        // Jacobian: T - c dq/dx (diagonal), border column -q,
        // border row dN/dx, corner 0.
        let mut jac = t.clone();
        let bf = forms.boundary_factor();
        let mut nrow = vec![0.0; x.len()];
        match mode {
            QuotientMode::Interior => {
                for i in 0..forms.cells() {
                    let dof = forms.cell_dof(i);
                    let w = forms.grid.cell_weights[i];
                    jac.diag[dof] -= c * w * (s - 1.0) * x[dof].abs().powf(s - 2.0);
                    nrow[dof] = s * w * signed_pow(x[dof], s - 1.0);
                }
            }
            QuotientMode::Boundary => {
                if let Some(b) = &forms.left {
                    jac.diag[0] -= c * bf * b.area * (s - 1.0) * x[0].abs().powf(s - 2.0);
                    nrow[0] = s * b.area * signed_pow(x[0], s - 1.0);
                }
                if let Some(b) = &forms.right {
                    let last = x.len() - 1;
                    jac.diag[last] -= c * bf * b.area * (s - 1.0) * x[last].abs().powf(s - 2.0);
                    nrow[last] = s * b.area * signed_pow(x[last], s - 1.0);
                }
            }
        }
        let col: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut rhs: Vec<f64> = residual_vec.iter_mut().map(|v| -*v).collect();
        rhs.push(-n_val);
        let Some(delta) = solve_arrow(&jac, &col, &nrow, 0.0, &rhs) else {
            break;
        };
        // Damped update preserving positivity.
        let mut damp = 1.0;
        let mut applied = false;
        for _ in 0..30 {
            let cand: Vec<f64> = (0..x.len()).map(|i| x[i] + damp * delta[i]).collect();
            let min = cand.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            if min > 0.0 {
                x = cand;
                c += damp * delta[x.len()];
                applied = true;
                break;
            }
            damp *= 0.5;
        }
        if !applied {
            break;
        }
    }

    let mut minimizer = forms.unpack(&x);
    normalize_constraint(&forms, &mut minimizer, s, mode)?;
    let value = forms.quotient(&minimizer, s, mode)?;
    let lagrange_c = match mode {
        QuotientMode::Interior => value,
        QuotientMode::Boundary => value / forms.boundary_factor(),
    };
    let res = el_residual_on(&forms, &minimizer, s, lagrange_c, mode);
    if !(res.interior <= opts.tol_interior && res.boundary_max() <= opts.tol_boundary) {
        return Err(CoreError::SolverFailure(format!(
            "flow stagnation: residuals {:.3e} / {:.3e} above tolerances {:.1e} / {:.1e}",
            res.interior,
            res.boundary_max(),
            opts.tol_interior,
            opts.tol_boundary
        )));
    }
    if !(minimizer.min_value() >= 1e-8 * minimizer.max_value()) {
        return Err(CoreError::SolverFailure(
            "minimizer lost strict positivity".into(),
        ));
    }
    history.push(IterRecord {
        iter: flow_iterations + newton_iterations,
        value,
        residual: res.interior,
    });
    Ok(SolveReport {
        minimizer,
        value,
        lagrange_c,
        residual_interior: res.interior,
        residual_boundary: res.boundary_max(),
        iterations: history,
        flow_iterations,
        newton_iterations,
        s,
        mode,
    })
}

/// Dense shooting output: the radial solution as an initial value problem
/// integrated across the interval.
#[derive(Debug, Clone)]
pub struct ShootingSolution {
    /// Solution resampled at the grid centers and traces.
    pub solution: GridFunction,
    /// Dense (t, value) samples suitable for building a curve.
    pub dense: Vec<(f64, f64)>,
    /// Free initial value found by the Newton iteration.
    pub initial_value: f64,
    /// Final boundary mismatch.
    pub mismatch: f64,
}

struct ShootSetup {
    start_focal: bool,
    start_side: Side,
    far_side: Side,
}

fn shoot_setup(profile: &IsoparametricProfile) -> Result<ShootSetup> {
    let (start_side, start_focal) = if profile.left.as_focal().is_some() {
        (Side::Left, true)
    } else if profile.right.as_focal().is_some() {
        (Side::Right, true)
    } else {
        (Side::Left, false)
    };
    let far_side = match start_side {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    };
    if profile.endpoint(far_side).as_boundary().is_none() {
        return Err(CoreError::Domain(
            "shooting needs a boundary component at the far endpoint".into(),
        ));
    }
    Ok(ShootSetup {
        start_focal,
        start_side,
        far_side,
    })
}

/// Integrates the radial Euler–Lagrange ODE from one endpoint and
/// Newton-adjusts the free initial value until the far boundary condition
/// holds. Interior mode solves a_n lap u + s_g u = c u^{s-1} with the
/// homogeneous Robin condition; boundary mode solves L_g u = 0 with
/// B_g u = c u^{s-1}.
///
/// Independent of the minimization path: the equation is marched as an
/// initial value problem with a series start at focal endpoints.
pub fn shooting_solve(
    profile: &IsoparametricProfile,
    grid: &Grid,
    s: f64,
    c: f64,
    mode: QuotientMode,
    init: Option<f64>,
) -> Result<ShootingSolution> {
    if profile.dim < 3 {
        return Err(CoreError::DimensionTooLow(profile.dim));
    }
    profile.require_usable()?;
    let setup = shoot_setup(profile)?;
    let an = crate::exponents::a_n(profile.dim);
    let nf = profile.dim as f64;
    let (ta, tb) = profile.interval;
    let width = tb - ta;

    // Right-hand side R(t, u) with a_n (-b u'' + a u') + s_g u = c u^{s-1}
    // (interior) or = 0 interior with the constant only in the boundary
    // condition (boundary mode).
    let c_interior = match mode {
        QuotientMode::Interior => c,
        QuotientMode::Boundary => 0.0,
    };
    let rhs = {
        let p = profile.clone();
        move |t: f64, u: f64| (c_interior * signed_pow(u, s - 1.0) - p.s.eval(t) * u) / an
    };
    let rhs_du = {
        let p = profile.clone();
        move |t: f64, u: f64| {
            (c_interior * (s - 1.0) * u.abs().powf(s - 2.0) - p.s.eval(t)) / an
        }
    };
    let odefn = {
        let p = profile.clone();
        let rhs = rhs.clone();
        move |t: f64, y: [f64; 2]| {
            let b = p.b.eval(t);
            [y[1], (p.a.eval(t) * y[1] - rhs(t, y[0])) / b]
        }
    };

    // March targets: dense samples merged with the grid centers.
    let mut targets: Vec<f64> = grid.centers.clone();
    let dense_n = 2048.max(2 * grid.cell_count());
    for i in 0..=dense_n {
        targets.push(ta + width * i as f64 / dense_n as f64);
    }
    let (t_start, t_far) = match setup.start_side {
        Side::Left => (ta, tb),
        Side::Right => (tb, ta),
    };
    // Keep strictly inside (t_start offset applied separately).
    targets.push(t_far);
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * width);
    if setup.start_side == Side::Right {
        targets.reverse();
    }
    // Drop targets behind the series start offset.
    let delta = 3e-6 * width;
    let targets: Vec<f64> = targets
        .into_iter()
        .filter(|&t| (t - t_start).abs() > delta * 1.001 && ((t - t_start) * (t_far - t_start)).is_sign_positive())
        .collect();

    let far_comp = profile.endpoint(setup.far_side).as_boundary().unwrap();
    let start_state = |y0: f64| -> Result<(f64, [f64; 2])> {
        if setup.start_focal {
            // Two-term Frobenius start of the regular solution.
            let (sgn, bp) = match setup.start_side {
                Side::Right => (1.0, -profile.b.deriv(t_start)),
                Side::Left => (-1.0, profile.b.deriv(t_start)),
            };
            let a0 = profile.a.eval(t_start);
            let ap = profile.a.deriv(t_start);
            let r0 = rhs(t_start, y0);
            let rp = rhs_du(t_start, y0);
            // tau measured away from the endpoint; phi = y + e1 tau + e2 tau^2.
            let e1 = -sgn * r0 / a0;
            let e2 = match setup.start_side {
                Side::Right => -e1 * (rp - ap) / (2.0 * (a0 + bp)),
                Side::Left => e1 * (rp - ap) / (2.0 * (a0 - bp)),
            };
            let tau = delta;
            let phi = y0 + e1 * tau + e2 * tau * tau;
            let dphi_dtau = e1 + 2.0 * e2 * tau;
            let (t1, dphi_dt) = match setup.start_side {
                Side::Right => (t_start - tau, -dphi_dtau),
                Side::Left => (t_start + tau, dphi_dtau),
            };
            Ok((t1, [phi, dphi_dt]))
        } else {
            let comp = profile.endpoint(setup.start_side).as_boundary().unwrap();
            let sqb = profile.b.eval(comp.param).sqrt();
            let bc_rhs = match mode {
                QuotientMode::Interior => 0.0,
                QuotientMode::Boundary => c * signed_pow(y0, s - 1.0),
            };
            // (2/(n-2)) sigma sqrt(b) u' + h u = bc_rhs.
            let du = (bc_rhs - comp.mean_curvature * y0) * (nf - 2.0)
                / (2.0 * comp.orientation * sqb);
            Ok((comp.param, [y0, du]))
        }
    };

    let mismatch_of = |y0: f64| -> Result<(f64, Vec<(f64, [f64; 2])>)> {
        let (t1, state) = start_state(y0)?;
        let path = integrate_to_targets(&odefn, t1, state, &targets, OdeOptions::default())?;
        let (tf, yf) = *path.last().unwrap();
        debug_assert!((tf - t_far).abs() < 1e-9 * width);
        let sqb = profile.b.eval(far_comp.param).sqrt();
        let bg = 2.0 / (nf - 2.0) * far_comp.orientation * sqb * yf[1]
            + far_comp.mean_curvature * yf[0];
        let target = match mode {
            QuotientMode::Interior => 0.0,
            QuotientMode::Boundary => c * signed_pow(yf[0], s - 1.0),
        };
        Ok((bg - target, path))
    };

    let mut y0 = init.unwrap_or(1.0).max(1e-8);
    let mut best: Option<(f64, Vec<(f64, [f64; 2])>)> = None;
    let scale = 1.0 + c.abs();
    let mut converged = false;
    let mut last_mismatch = f64::INFINITY;
    for _ in 0..80 {
        let (g, path) = mismatch_of(y0)?;
        last_mismatch = g;
        best = Some((g, path));
        if g.abs() <= 1e-11 * scale {
            converged = true;
            break;
        }
        // Finite-difference Newton on the free initial value.
        let h = 1e-7 * y0.abs().max(1e-3);
        let (gp, _) = mismatch_of(y0 + h)?;
        let dg = (gp - g) / h;
        if dg.abs() < 1e-300 {
            break;
        }
        let mut step = -g / dg;
        // Keep the initial value positive.
        while y0 + step <= 0.0 {
            step *= 0.5;
        }
        y0 += step;
    }
    if !converged {
        return Err(CoreError::NewtonDivergence {
            mismatch: last_mismatch,
        });
    }
    let (mismatch, path) = best.unwrap();

    // Resample: split the path into grid centers and dense output.
    let mut at: std::collections::BTreeMap<i64, (f64, f64)> = std::collections::BTreeMap::new();
    for (t, y) in &path {
        at.insert(quantize(*t, width), (*t, y[0]));
    }
    let lookup = |t: f64| -> f64 {
        at.get(&quantize(t, width))
            .map(|v| v.1)
            .unwrap_or(f64::NAN)
    };
    let values: Vec<f64> = grid.centers.iter().map(|&t| lookup(t)).collect();
    if values.iter().any(|v| v.is_nan()) {
        return Err(CoreError::SolverFailure(
            "shooting resample missed a grid center".into(),
        ));
    }
    let mut dense: Vec<(f64, f64)> = path.iter().map(|(t, y)| (*t, y[0])).collect();
    dense.push((t_start, y0_value(&setup, y0, &path)));
    dense.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    dense.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-13 * width);
    let trace_left = dense.first().unwrap().1;
    let trace_right = dense.last().unwrap().1;
    Ok(ShootingSolution {
        solution: GridFunction {
            values,
            trace_left,
            trace_right,
        },
        dense,
        initial_value: y0,
        mismatch,
    })
}

fn quantize(t: f64, width: f64) -> i64 {
    (t / (1e-12 * width)).round() as i64
}

fn y0_value(setup: &ShootSetup, y0: f64, _path: &[(f64, [f64; 2])]) -> f64 {
    // The free value is the trace at the start side.
    let _ = setup;
    y0
}

/// A constant-curvature conformal metric with its certification data.
#[derive(Debug, Clone)]
pub struct MetricResult {
    pub profile: IsoparametricProfile,
    /// Conformal factor as a curve.
    pub conformal_factor: ScalarCurve,
    pub factor_on_grid: GridFunction,
    /// Scalar curvature of the new metric (mean over samples).
    pub scalar_curvature: f64,
    /// Max relative deviation of the scalar curvature from its mean.
    pub scalar_deviation: f64,
    /// Boundary mean curvatures of the new metric.
    pub boundary_curvatures: Vec<f64>,
    /// Sup distance between minimizer and shooting solution.
    pub cross_check: f64,
    pub value: f64,
}

/// Options of the constant-curvature construction.
#[derive(Debug, Clone, Default)]
pub struct MetricOptions {
    /// Skip the finiteness certificate of the boundary invariant.
    pub override_finiteness: bool,
}

fn curve_from_dense(dense: &[(f64, f64)]) -> Result<ScalarCurve> {
    let ts: Vec<f64> = dense.iter().map(|d| d.0).collect();
    let vs: Vec<f64> = dense.iter().map(|d| d.1).collect();
    Ok(ScalarCurve::Table {
        table: CubicSpline::new(ts, vs)?,
    })
}

fn certify(
    base: &IsoparametricProfile,
    u: &ScalarCurve,
) -> Result<(IsoparametricProfile, f64, f64, Vec<f64>)> {
    let new_profile = conformal_change(base, u)?;
    let (ta, tb) = base.interval;
    let samples = 1500;
    let mut mean = 0.0;
    for i in 0..=samples {
        mean += new_profile.s.eval(ta + (tb - ta) * i as f64 / samples as f64);
    }
    mean /= (samples + 1) as f64;
    let mut dev = 0.0f64;
    for i in 0..=samples {
        let v = new_profile.s.eval(ta + (tb - ta) * i as f64 / samples as f64);
        dev = dev.max((v - mean).abs());
    }
    let hs: Vec<f64> = new_profile
        .boundary_components()
        .iter()
        .map(|b| b.mean_curvature)
        .collect();
    Ok((new_profile, mean, dev, hs))
}

/// Builds the two canonical conformal metrics: `scalar` has constant
/// scalar curvature with minimal boundary (interior minimizer at the
/// critical exponent), `flat` is scalar flat with constant boundary mean
/// curvature (boundary minimizer at the critical trace exponent),
/// returned unit-volume normalized. Both are certified by evaluating the
/// transformed curvature data of the shooting-polished solutions.
pub fn constant_curvature_metrics(
    profile: &IsoparametricProfile,
    grid: &Grid,
    opts: &MetricOptions,
) -> Result<(MetricResult, MetricResult)> {
    if profile.dim < 3 {
        return Err(CoreError::DimensionTooLow(profile.dim));
    }
    if profile.k_f() < 1 {
        return Err(CoreError::Domain(format!(
            "constant-curvature construction needs k(f) >= 1, got {}",
            profile.k_f()
        )));
    }
    if !opts.override_finiteness {
        let probe = conformal_eigen_probe(profile, grid)?;
        if !probe.y_tilde_certified_finite {
            return Err(CoreError::Domain(
                "boundary invariant finiteness not certified; pass the override to proceed"
                    .into(),
            ));
        }
    }
    let n = profile.dim;
    let pn = p_n(n);
    let pb = p_boundary(n);

    let build = |s: f64, mode: QuotientMode| -> Result<MetricResult> {
        let report = minimize_quotient(profile, grid, s, mode, &SolveOptions::default())?;
        let shot = shooting_solve(
            profile,
            grid,
            s,
            report.lagrange_c,
            mode,
            Some(match profile.left.as_focal().or(profile.right.as_focal()) {
                Some(_) => {
                    // Free value sits at the focal endpoint.
                    if profile.left.as_focal().is_some() {
                        report.minimizer.trace_left
                    } else {
                        report.minimizer.trace_right
                    }
                }
                None => report.minimizer.trace_left,
            }),
        )?;
        let cross_check = report.minimizer.sup_distance(&shot.solution);
        let u = curve_from_dense(&shot.dense)?;
        let (new_profile, mean_s, dev_s, hs) = certify(profile, &u)?;
        Ok(MetricResult {
            profile: new_profile,
            conformal_factor: u,
            factor_on_grid: shot.solution,
            scalar_curvature: mean_s,
            scalar_deviation: dev_s,
            boundary_curvatures: hs,
            cross_check,
            value: report.value,
        })
    };

    // Constant scalar curvature, minimal boundary.
    let scalar = build(pn, QuotientMode::Interior)?;
    let s_scale = scalar.scalar_curvature.abs().max(1.0);
    if scalar.scalar_deviation > 1e-5 * s_scale {
        return Err(CoreError::SolverFailure(format!(
            "scalar curvature not constant: deviation {:.3e}",
            scalar.scalar_deviation
        )));
    }
    if scalar
        .boundary_curvatures
        .iter()
        .any(|h| h.abs() > 1e-6 * s_scale)
    {
        return Err(CoreError::SolverFailure(format!(
            "boundary not minimal: h = {:?}",
            scalar.boundary_curvatures
        )));
    }

    // Scalar flat, constant boundary mean curvature, unit volume.
    let mut flat = build(pb, QuotientMode::Boundary)?;
    {
        // Unit-volume normalization: volume scales by lambda^{p_n}.
        let vol = flat.profile.volume()?;
        let lambda = vol.powf(-1.0 / pn);
        let u_scaled = flat.conformal_factor.clone().scaled(lambda);
        let (new_profile, mean_s, dev_s, hs) = certify(profile, &u_scaled)?;
        flat.profile = new_profile;
        flat.conformal_factor = u_scaled;
        flat.factor_on_grid.scale(lambda);
        flat.scalar_curvature = mean_s;
        flat.scalar_deviation = dev_s;
        flat.boundary_curvatures = hs;
    }
    let base_scale = {
        let (ta, tb) = profile.interval;
        (0..33)
            .map(|i| profile.s.eval(ta + (tb - ta) * i as f64 / 32.0).abs())
            .fold(1.0f64, f64::max)
    };
    if flat.scalar_curvature.abs().max(flat.scalar_deviation) > 1e-5 * base_scale {
        return Err(CoreError::SolverFailure(format!(
            "metric not scalar flat: s = {:.3e} +/- {:.3e}",
            flat.scalar_curvature, flat.scalar_deviation
        )));
    }
    let h_mean = flat.boundary_curvatures.iter().sum::<f64>()
        / flat.boundary_curvatures.len().max(1) as f64;
    if flat
        .boundary_curvatures
        .iter()
        .any(|h| (h - h_mean).abs() > 1e-6 * h_mean.abs().max(1.0))
    {
        return Err(CoreError::SolverFailure(format!(
            "boundary mean curvature not constant: {:?}",
            flat.boundary_curvatures
        )));
    }
    Ok((scalar, flat))
}
