//! Constrained energy minimization on the mixed constraint set
//! a int |u|^p dv + b int_bdry |u|^q dsigma = 1, the induced constants
//! (c1, c2) of the prescribed-curvature system, the c_{a,b} curve with its
//! bounds, and root finding for a prescribed boundary mean curvature.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::exponents::{p_boundary, p_n};
use crate::forms::{assemble, AssembledForms};
use crate::grid::{Grid, GridFunction};
use crate::linalg::solve_arrow;
use crate::profile::{IsoparametricProfile, QuotientMode};
use crate::spectra::conformal_eigen_probe;
use crate::yamabe::{check_subcritical, Init};

/// Constraint data: a > 0, b real, exponents q < p.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstraintSpec {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
}

impl ConstraintSpec {
    /// Critical pair (p_n, boundary exponent) for the given dimension.
    pub fn critical(dim: usize, a: f64, b: f64) -> ConstraintSpec {
        ConstraintSpec {
            a,
            b,
            p: p_n(dim),
            q: p_boundary(dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(CoreError::Domain(format!(
                "constraint coefficient a = {} must be positive",
                self.a
            )));
        }
        if !(self.q < self.p) || !(self.q >= 1.0) {
            return Err(CoreError::Domain(format!(
                "exponents must satisfy 1 <= q < p, got q = {}, p = {}",
                self.q, self.p
            )));
        }
        Ok(())
    }
}

/// The unique positive scaling lambda with
/// F(lambda) = P lambda^p + Q lambda^q = 1, where P = a int |phi|^p dv and
/// Q = b int |phi|^q dsigma. For b >= 0 the map is increasing from zero;
/// for b < 0 the root is the one right of the global minimum (F grows to
/// infinity), so it always exists.
pub fn constraint_project(
    forms: &AssembledForms,
    phi: &GridFunction,
    spec: &ConstraintSpec,
) -> Result<f64> {
    spec.validate()?;
    if !(phi.min_value() > 0.0) {
        return Err(CoreError::Domain(
            "constraint projection needs a positive function".into(),
        ));
    }
    let p_big = forms.interior_lp(phi, spec.p) * spec.a;
    let q_big = forms.boundary_lp(phi, spec.q) * spec.b;
    if !(p_big > 0.0) {
        return Err(CoreError::ZeroDenominator("constraint projection"));
    }
    let f = |l: f64| p_big * l.powf(spec.p) + q_big * l.powf(spec.q);
    let fp = |l: f64| {
        spec.p * p_big * l.powf(spec.p - 1.0) + spec.q * q_big * l.powf(spec.q - 1.0)
    };
    // Bracket the root.
    let mut lo = if q_big >= 0.0 {
        0.0
    } else {
        // Global minimum of F sits at (-q Q / (p P))^{1/(p - q)}.
        (-spec.q * q_big / (spec.p * p_big)).powf(1.0 / (spec.p - spec.q))
    };
    let mut hi = lo.max(p_big.powf(-1.0 / spec.p)).max(1e-8);
    let mut guard = 0;
    while f(hi) < 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 400 {
            return Err(CoreError::SolverFailure(
                "constraint projection bracket failed".into(),
            ));
        }
    }
    // Safeguarded Newton from the bracket midpoint.
    let mut l = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = f(l) - 1.0;
        if v.abs() <= 1e-14 {
            break;
        }
        if v > 0.0 {
            hi = l;
        } else {
            lo = l;
        }
        let d = fp(l);
        let newton = if d > 0.0 { l - v / d } else { f64::NAN };
        l = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(l)
}

/// Result of the constrained minimization.
#[derive(Debug, Clone, Serialize)]
pub struct HanLiReport {
    /// Positive minimizer on the constraint set.
    pub minimizer: GridFunction,
    /// The constrained infimum Y^{a,b} = E(u).
    pub value: f64,
    /// Interior constant of the stationarity system.
    pub c1: f64,
    /// Boundary constant (with the 1/(2(n-1)) prefactor).
    pub c2: f64,
    /// A(u) = a p int u^p + b q int u^q.
    pub a_of_u: f64,
    pub residual_interior: f64,
    pub residual_boundary: f64,
    /// Worst constraint violation seen across accepted iterates.
    pub feasibility_max: f64,
    pub iterations: usize,
}

/// Controls for the constrained solver.
#[derive(Debug, Clone)]
pub struct HanLiOptions {
    pub tol_interior: f64,
    pub tol_boundary: f64,
    pub init: Init,
    /// Skip the positive-Yamabe probe (for callers that already ran it).
    pub skip_probe: bool,
}

impl Default for HanLiOptions {
    fn default() -> Self {
        HanLiOptions {
            tol_interior: 1e-6,
            tol_boundary: 1e-8,
            init: Init::Constant,
            skip_probe: false,
        }
    }
}

fn constraint_value(forms: &AssembledForms, f: &GridFunction, spec: &ConstraintSpec) -> f64 {
    spec.a * forms.interior_lp(f, spec.p) + spec.b * forms.boundary_lp(f, spec.q)
}

/// Gradient of the constraint functional in DOF space.
fn constraint_gradient(
    forms: &AssembledForms,
    x: &[f64],
    spec: &ConstraintSpec,
) -> Vec<f64> {
    let mut g = vec![0.0; forms.dof_count()];
    for i in 0..forms.cells() {
        let dof = forms.cell_dof(i);
        g[dof] = spec.a
            * spec.p
            * forms.grid.cell_weights[i]
            * x[dof].signum()
            * x[dof].abs().powf(spec.p - 1.0);
    }
    if let Some(b) = &forms.left {
        g[0] += spec.b * spec.q * b.area * x[0].signum() * x[0].abs().powf(spec.q - 1.0);
    }
    if let Some(b) = &forms.right {
        let last = forms.dof_count() - 1;
        g[last] +=
            spec.b * spec.q * b.area * x[last].signum() * x[last].abs().powf(spec.q - 1.0);
    }
    g
}

/// Stationarity residuals of the system
/// a_n lap u + s_g u = c1 u^{p-1}, B_g u = c2 u^{q-1}.
fn hanli_residual(
    forms: &AssembledForms,
    f: &GridFunction,
    spec: &ConstraintSpec,
    c1: f64,
    c2: f64,
) -> (f64, f64) {
    let t = forms.energy_tridiag().expect("dimension gated");
    let x = forms.pack(f);
    let y = t.apply(&x);
    let bf = forms.boundary_factor();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..forms.cells() {
        let dof = forms.cell_dof(i);
        let w = forms.grid.cell_weights[i];
        let r = (y[dof] - c1 * w * x[dof].abs().powf(spec.p - 1.0)) / w;
        num += w * r * r;
        den += w * x[dof] * x[dof];
    }
    let interior = (num / den.max(1e-300)).sqrt();
    let mut bres = 0.0f64;
    if let Some(b) = &forms.left {
        let r = y[0] / (bf * b.area) - c2 * x[0].abs().powf(spec.q - 1.0);
        bres = bres.max(r.abs());
    }
    if let Some(b) = &forms.right {
        let last = forms.dof_count() - 1;
        let r = y[last] / (bf * b.area) - c2 * x[last].abs().powf(spec.q - 1.0);
        bres = bres.max(r.abs());
    }
    (interior, bres)
}

/// Minimizes E over the constraint set by projected preconditioned
/// descent (projection through `constraint_project` after every step,
/// keeping feasibility at root-finder tolerance) followed by a bordered
/// Newton polish of the KKT system.
///
/// Refuses on non-admissible exponents or a nonpositive Yamabe probe.
pub fn minimize_constrained(
    profile: &IsoparametricProfile,
    grid: &Grid,
    spec: &ConstraintSpec,
    opts: &HanLiOptions,
) -> Result<HanLiReport> {
    spec.validate()?;
    if profile.dim < 3 {
        return Err(CoreError::DimensionTooLow(profile.dim));
    }
    let vp = check_subcritical(profile, spec.p, QuotientMode::Interior)?;
    let vq = check_subcritical(profile, spec.q, QuotientMode::Boundary)?;
    if !vp.admissible {
        return Err(CoreError::NotAdmissible {
            s: spec.p,
            mode: "interior",
            threshold: vp.threshold.to_string(),
        });
    }
    if !vq.admissible {
        return Err(CoreError::NotAdmissible {
            s: spec.q,
            mode: "boundary",
            threshold: vq.threshold.to_string(),
        });
    }
    if !opts.skip_probe {
        let probe = conformal_eigen_probe(profile, grid)?;
        if probe.sign_robin <= 0 {
            return Err(CoreError::Domain(
                "constrained problem needs a positive Yamabe probe".into(),
            ));
        }
    }
    let forms = assemble(profile, grid)?;
    let t = forms.energy_tridiag()?;

    // SPD preconditioner as in the quotient flow.
    let mut precond = t.clone();
    let sigma = {
        let worst = forms
            .cell_curvature
            .iter()
            .zip(&forms.grid.cell_weights)
            .map(|(s, w)| s / w)
            .fold(f64::INFINITY, f64::min);
        1.0 + (-worst).max(0.0)
    };
    for i in 0..forms.cells() {
        precond.diag[forms.cell_dof(i)] += sigma * forms.grid.cell_weights[i];
    }
    let precond_lu = precond.lu();

    let mut phi = match &opts.init {
        Init::Constant => GridFunction::constant(&forms.grid, 1.0),
        Init::Random(seed) => {
            use rand::Rng;
            use rand_chacha::rand_core::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let mut f = GridFunction::constant(&forms.grid, 1.0);
            for v in &mut f.values {
                *v = 0.25 + 1.5 * rng.gen::<f64>();
            }
            f.trace_left = 0.25 + 1.5 * rng.gen::<f64>();
            f.trace_right = 0.25 + 1.5 * rng.gen::<f64>();
            f
        }
        Init::Given(f) => f.abs(),
    };
    let lambda = constraint_project(&forms, &phi, spec)?;
    phi.scale(lambda);
    let mut energy = forms.energy(&phi)?;
    let mut feasibility_max = (constraint_value(&forms, &phi, spec) - 1.0).abs();
    let mut iterations = 0usize;

    // Projected descent phase.
    for _ in 0..400 {
        iterations += 1;
        let x = forms.pack(&phi);
        let grad: Vec<f64> = t.apply(&x).iter().map(|v| 2.0 * v).collect();
        let dir: Vec<f64> = precond_lu.solve(&grad).iter().map(|v| -v).collect();
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if slope >= 0.0 {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = x
                .iter()
                .zip(&dir)
                .map(|(xi, di)| (xi + alpha * di).abs().max(1e-300))
                .collect();
            let mut cand_f = forms.unpack(&cand);
            if let Ok(l) = constraint_project(&forms, &cand_f, spec) {
                cand_f.scale(l);
                let cand_e = forms.energy(&cand_f)?;
                if cand_e <= energy + 1e-4 * alpha * slope {
                    phi = cand_f;
                    energy = cand_e;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        feasibility_max =
            feasibility_max.max((constraint_value(&forms, &phi, spec) - 1.0).abs());
        if iterations >= 2 {
            // Energy progress stalled: hand over to Newton.
            let x_now = forms.pack(&phi);
            let g_inf = t
                .apply(&x_now)
                .iter()
                .zip(constraint_gradient(&forms, &x_now, spec))
                .map(|(tv, gv)| 2.0 * tv - (2.0 * energy) * gv)
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if g_inf < 1e-3 {
                break;
            }
        }
    }

    // KKT Newton: rows T x - (kappa/2) grad g(x) = 0, g(x) = 1.
    let mut x = forms.pack(&phi);
    let a_quant = |forms: &AssembledForms, f: &GridFunction| -> f64 {
        spec.a * spec.p * forms.interior_lp(f, spec.p)
            + spec.b * spec.q * forms.boundary_lp(f, spec.q)
    };
    let mut kappa = 2.0 * energy / a_quant(&forms, &phi);
    let bf = forms.boundary_factor();
    for _ in 0..80 {
        iterations += 1;
        let f = forms.unpack(&x);
        let g_grad = constraint_gradient(&forms, &x, spec);
        let tx = t.apply(&x);
        let mut res: Vec<f64> = (0..x.len())
            .map(|i| tx[i] - 0.5 * kappa * g_grad[i])
            .collect();
        let g_val = constraint_value(&forms, &f, spec) - 1.0;
        let rnorm = res.iter().fold(0.0f64, |m, v| m.max(v.abs())) + g_val.abs();
        if rnorm < 1e-13 * (1.0 + energy.abs()) {
            break;
        }
        let mut jac = t.clone();
        for i in 0..forms.cells() {
            let dof = forms.cell_dof(i);
            jac.diag[dof] -= 0.5
                * kappa
                * spec.a
                * spec.p
                * (spec.p - 1.0)
                * forms.grid.cell_weights[i]
                * x[dof].abs().powf(spec.p - 2.0);
        }
        if let Some(b) = &forms.left {
            jac.diag[0] -=
                0.5 * kappa * spec.b * spec.q * (spec.q - 1.0) * b.area
                    * x[0].abs().powf(spec.q - 2.0);
        }
        if let Some(b) = &forms.right {
            let last = x.len() - 1;
            jac.diag[last] -= 0.5
                * kappa
                * spec.b
                * spec.q
                * (spec.q - 1.0)
                * b.area
                * x[last].abs().powf(spec.q - 2.0);
        }
        let col: Vec<f64> = g_grad.iter().map(|v| -0.5 * v).collect();
        let mut rhs: Vec<f64> = res.iter_mut().map(|v| -*v).collect();
        rhs.push(-g_val);
        let Some(delta) = solve_arrow(&jac, &col, &g_grad, 0.0, &rhs) else {
            break;
        };
        let mut damp = 1.0;
        let mut ok = false;
        for _ in 0..30 {
            let cand: Vec<f64> = (0..x.len()).map(|i| x[i] + damp * delta[i]).collect();
            if cand.iter().all(|&v| v > 0.0) {
                x = cand;
                kappa += damp * delta[x.len()];
                ok = true;
                break;
            }
            damp *= 0.5;
        }
        if !ok {
            break;
        }
        feasibility_max = feasibility_max
            .max((constraint_value(&forms, &forms.unpack(&x), spec) - 1.0).abs());
    }

    let mut minimizer = forms.unpack(&x);
    // Final exact projection.
    let lambda = constraint_project(&forms, &minimizer, spec)?;
    minimizer.scale(lambda);
    feasibility_max =
        feasibility_max.max((constraint_value(&forms, &minimizer, spec) - 1.0).abs());
    let value = forms.energy(&minimizer)?;
    let a_u = a_quant(&forms, &minimizer);
    let c1 = spec.a * spec.p * value / a_u;
    let c2 = spec.b * spec.q * value / (bf * a_u);
    let (ri, rb) = hanli_residual(&forms, &minimizer, spec, c1, c2);
    if !(ri <= opts.tol_interior && rb <= opts.tol_boundary) {
        return Err(CoreError::SolverFailure(format!(
            "constrained solve residuals {ri:.3e} / {rb:.3e} above tolerance"
        )));
    }
    if !(minimizer.min_value() > 0.0) {
        return Err(CoreError::SolverFailure(
            "constrained minimizer lost positivity".into(),
        ));
    }
    Ok(HanLiReport {
        minimizer,
        value,
        c1,
        c2,
        a_of_u: a_u,
        residual_interior: ri,
        residual_boundary: rb,
        feasibility_max,
        iterations,
    })
}

/// One sample of the c_{a,b} curve with its certified bounds.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSample {
    pub a: f64,
    pub b: f64,
    pub y_ab: f64,
    pub a_of_u: f64,
    pub c_ab: f64,
    pub lower_bound: f64,
    pub upper_bound: Option<f64>,
    pub bound_violated: bool,
    pub residual_interior: f64,
    pub residual_boundary: f64,
}

/// The induced boundary constant c_{a,b} for a critical-pair minimizer:
/// b / sqrt(2 n (n-2) a) * sqrt(Y / A(u)).
fn c_ab_of(dim: usize, a: f64, b: f64, y: f64, a_of_u: f64) -> f64 {
    let nf = dim as f64;
    b / (2.0 * nf * (nf - 2.0) * a).sqrt() * (y / a_of_u).max(0.0).sqrt()
}

/// Samples c_{a,b} along a path of (a, b) pairs at the critical exponents,
/// flagging any violated bound. Violations are reported, not thrown.
pub fn c_curve(
    profile: &IsoparametricProfile,
    grid: &Grid,
    path: &[(f64, f64)],
    opts: &HanLiOptions,
) -> Result<Vec<CurveSample>> {
    let nf = profile.dim as f64;
    let mut out = Vec::with_capacity(path.len());
    let mut warm: Option<GridFunction> = None;
    for &(a, b) in path {
        let spec = ConstraintSpec::critical(profile.dim, a, b);
        let mut o = opts.clone();
        if let Some(w) = &warm {
            o.init = Init::Given(w.clone());
        }
        o.skip_probe = out.is_empty().then_some(opts.skip_probe).unwrap_or(true);
        let rep = minimize_constrained(profile, grid, &spec, &o)?;
        let c_ab = c_ab_of(profile.dim, a, b, rep.value, rep.a_of_u);
        let lower = b / (2.0 * nf * a.sqrt()) * rep.value.max(0.0).sqrt();
        let upper = (b > 0.0)
            .then(|| b / (2.0 * (nf * (nf - 1.0) * a).sqrt()) * rep.value.max(0.0).sqrt());
        let tol = 1e-9 * (1.0 + c_ab.abs());
        let mut violated = c_ab < lower - tol;
        if let Some(u) = upper {
            violated = violated || c_ab > u + tol;
        }
        warm = Some(rep.minimizer.clone());
        out.push(CurveSample {
            a,
            b,
            y_ab: rep.value,
            a_of_u: rep.a_of_u,
            c_ab,
            lower_bound: lower,
            upper_bound: upper,
            bound_violated: violated,
            residual_interior: rep.residual_interior,
            residual_boundary: rep.residual_boundary,
        });
    }
    Ok(out)
}

/// Output of the prescribed-mean-curvature root finder.
#[derive(Debug, Clone, Serialize)]
pub struct PrescribedReport {
    pub a: f64,
    pub b: f64,
    /// Attained boundary constant (within tolerance of the target).
    pub c_attained: f64,
    /// Normalized solution of L_g v = v^{p_n - 1}, B_g v = c v^{q - 1}.
    pub solution: GridFunction,
    pub y_ab: f64,
    pub residual_interior: f64,
    pub residual_boundary: f64,
    /// Consistency gap between the closed-form c_{a,b} and the constant
    /// obtained by rescaling the minimizer.
    pub normalization_gap: f64,
}

/// Controls of the root finder.
#[derive(Debug, Clone)]
pub struct PrescribedOptions {
    pub tol_c: f64,
    /// Smallest coefficient `a` the sweep may reach.
    pub min_a: f64,
    pub inner: HanLiOptions,
}

impl Default for PrescribedOptions {
    fn default() -> Self {
        PrescribedOptions {
            tol_c: 1e-6,
            min_a: 1e-12,
            inner: HanLiOptions::default(),
        }
    }
}

/// Finds (a, b) with c_{a,b} equal to the prescribed boundary constant by
/// sweeping b at a = 1 for moderate targets and a at b = +/-1 for large
/// ones (the limit directions at the parameter extremes guarantee the
/// bracket), then bisecting. The positive-curvature normalization
/// L_g v = v^{p_n - 1} is returned with its residual certificate.
pub fn find_prescribed_mean_curvature(
    profile: &IsoparametricProfile,
    grid: &Grid,
    c_target: f64,
    opts: &PrescribedOptions,
) -> Result<PrescribedReport> {
    if profile.dim < 3 {
        return Err(CoreError::DimensionTooLow(profile.dim));
    }
    if profile.k_f() < 1 {
        return Err(CoreError::Domain(format!(
            "prescribed-curvature construction needs k(f) >= 1, got {}",
            profile.k_f()
        )));
    }
    let pn = p_n(profile.dim);
    let qn = p_boundary(profile.dim);
    let mut warm: Option<GridFunction> = None;

    let eval = |a: f64, b: f64, warm: &mut Option<GridFunction>| -> Result<(f64, HanLiReport)> {
        let spec = ConstraintSpec::critical(profile.dim, a, b);
        let mut o = opts.inner.clone();
        if let Some(w) = warm {
            o.init = Init::Given(w.clone());
            o.skip_probe = true;
        }
        let rep = minimize_constrained(profile, grid, &spec, &o)?;
        *warm = Some(rep.minimizer.clone());
        Ok((c_ab_of(profile.dim, a, b, rep.value, rep.a_of_u), rep))
    };

    let finish = |a: f64, b: f64, rep: HanLiReport, c_att: f64| -> Result<PrescribedReport> {
        // v = c1^{1/(p-2)} u solves L_g v = v^{p-1}; then B_g v = c v^{q-1}
        // with c = c2 c1^{(2-q)/(p-2)}.
        if !(rep.c1 > 0.0) {
            return Err(CoreError::SolverFailure(
                "interior constant not positive; cannot normalize".into(),
            ));
        }
        let scale = rep.c1.powf(1.0 / (pn - 2.0));
        let mut v = rep.minimizer.clone();
        v.scale(scale);
        let c_norm = rep.c2 * rep.c1.powf((2.0 - qn) / (pn - 2.0));
        Ok(PrescribedReport {
            a,
            b,
            c_attained: c_att,
            solution: v,
            y_ab: rep.value,
            residual_interior: rep.residual_interior,
            residual_boundary: rep.residual_boundary,
            normalization_gap: (c_norm - c_att).abs(),
        })
    };

    if c_target.abs() <= opts.tol_c {
        let (c0, rep) = eval(1.0, 0.0, &mut warm)?;
        return finish(1.0, 0.0, rep, c0);
    }
    let sign = c_target.signum();
    let b_unit = sign;

    // Landmark at (1, +/-1) decides the sweep direction.
    let (c_unit, rep_unit) = eval(1.0, b_unit, &mut warm)?;
    if (c_unit - c_target).abs() <= opts.tol_c {
        return finish(1.0, b_unit, rep_unit, c_unit);
    }

    enum Sweep {
        OverB,
        OverA,
    }
    let sweep = if c_target.abs() < c_unit.abs() {
        Sweep::OverB
    } else {
        Sweep::OverA
    };

    let (mut lo, mut hi, mut f_lo, mut f_hi) = match sweep {
        Sweep::OverB => {
            // c(1, b) -> 0 as b -> 0: bracket [b_eps, b_unit].
            let b_eps = 1e-8 * sign;
            let (c_eps, _) = eval(1.0, b_eps, &mut warm)?;
            (
                b_eps,
                b_unit,
                c_eps - c_target,
                c_unit - c_target,
            )
        }
        Sweep::OverA => {
            // |c(a, +/-1)| grows without bound as a -> 0+.
            let mut a_lo = 1.0;
            let mut c_lo = c_unit;
            let mut found = false;
            while a_lo > opts.min_a {
                a_lo *= 0.25;
                let (c_try, _) = eval(a_lo, b_unit, &mut warm)?;
                c_lo = c_try;
                if c_try.abs() >= c_target.abs() {
                    found = true;
                    break;
                }
            }
            if !found {
                return Err(CoreError::SolverFailure(format!(
                    "sweep budget exhausted: attained c range [{:.6}, {:.6}] misses target {c_target}",
                    c_unit.min(c_lo),
                    c_unit.max(c_lo)
                )));
            }
            (a_lo, 1.0, c_lo - c_target, c_unit - c_target)
        }
    };
    if f_lo * f_hi > 0.0 {
        return Err(CoreError::SolverFailure(
            "no sign change in the prescribed-curvature bracket".into(),
        ));
    }

    // Bisection with secant acceleration on the bracketed parameter.
    let mut best: Option<(f64, f64, f64, HanLiReport)> = None;
    for _ in 0..80 {
        let mid = {
            let secant = lo - f_lo * (hi - lo) / (f_hi - f_lo);
            let inside = secant > lo.min(hi) + 0.1 * (hi - lo).abs()
                && secant < lo.max(hi) - 0.1 * (hi - lo).abs();
            if inside {
                secant
            } else {
                0.5 * (lo + hi)
            }
        };
        let (a, b) = match sweep {
            Sweep::OverB => (1.0, mid),
            Sweep::OverA => (mid, b_unit),
        };
        let (c_mid, rep) = eval(a, b, &mut warm)?;
        let f_mid = c_mid - c_target;
        let better = best
            .as_ref()
            .map(|(_, _, c, _)| (c - c_target).abs() > f_mid.abs())
            .unwrap_or(true);
        if better {
            best = Some((a, b, c_mid, rep));
        }
        if f_mid.abs() <= opts.tol_c {
            break;
        }
        if f_mid * f_lo <= 0.0 {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if (hi - lo).abs() < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let (a, b, c_att, rep) =
        best.ok_or_else(|| CoreError::SolverFailure("root finder made no progress".into()))?;
    if (c_att - c_target).abs() > opts.tol_c {
        return Err(CoreError::SolverFailure(format!(
            "prescribed curvature root finding stalled at c = {c_att} (target {c_target})"
        )));
    }
    finish(a, b, rep, c_att)
}
