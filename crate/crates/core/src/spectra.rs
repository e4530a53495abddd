//! Neumann spectra of the reduced operator -b phi'' + a phi' restricted to
//! radial functions, and the three conformal eigenvalue probes (Dirichlet,
//! Robin, Steklov-type) whose first-eigenvalue signs track the sign of the
//! boundary Yamabe invariants.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::forms::{assemble, AssembledForms};
use crate::grid::{Grid, GridFunction};
use crate::linalg::{inverse_iteration, smallest_eigenvalues, Tridiag};
use crate::profile::IsoparametricProfile;

/// Ordered radial Neumann eigenpairs with convergence metadata.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// mu_0 <= mu_1 <= ... (mu_0 = 0 with constant eigenfunction).
    pub eigenvalues: Vec<f64>,
    /// Weight-orthonormal eigenfunctions.
    pub eigenfunctions: Vec<GridFunction>,
    pub cells: usize,
    pub graded: bool,
    /// Two-grid discretization error estimate per eigenvalue; NaN when the
    /// coarse companion grid would fall below the minimum size.
    pub error_estimates: Vec<f64>,
}

/// Symmetric reduction of the generalized pencil A x = mu W x to
/// D^{-1/2} A D^{-1/2} y = mu y.
fn symmetric_pencil(a: &Tridiag, masses: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = a.n();
    let inv_sqrt: Vec<f64> = masses.iter().map(|w| 1.0 / w.sqrt()).collect();
    let d: Vec<f64> = (0..n).map(|i| a.diag[i] * inv_sqrt[i] * inv_sqrt[i]).collect();
    let e: Vec<f64> = (0..n - 1)
        .map(|i| a.upper[i] * inv_sqrt[i] * inv_sqrt[i + 1])
        .collect();
    (d, e)
}

fn eigenvalues_on(forms: &AssembledForms, count: usize) -> Vec<f64> {
    let (a, masses) = forms.neumann_pencil();
    let (d, e) = symmetric_pencil(&a, &masses);
    smallest_eigenvalues(&d, &e, count)
}

/// First `count` radial Neumann eigenpairs on the given grid.
///
/// Zero-flux conditions hold at boundary components; focal endpoints get
/// the natural (vanishing-flux) treatment. The discrete pencil is solved by
/// Sturm bisection and inverse iteration, deterministic and to machine
/// precision at the discrete level.
pub fn neumann_spectrum(
    profile: &IsoparametricProfile,
    grid: &Grid,
    count: usize,
) -> Result<SpectrumResult> {
    if count == 0 {
        return Err(CoreError::Domain("eigenpair count must be >= 1".into()));
    }
    let m = grid.cell_count();
    if count > m / 2 {
        return Err(CoreError::Domain(format!(
            "count = {count} exceeds the resolution of a {m}-cell grid"
        )));
    }
    let forms = assemble(profile, grid)?;
    let (a, masses) = forms.neumann_pencil();
    let (d, e) = symmetric_pencil(&a, &masses);
    let eigenvalues = smallest_eigenvalues(&d, &e, count);

    let inv_sqrt: Vec<f64> = masses.iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut ys: Vec<Vec<f64>> = Vec::with_capacity(count);
    for (k, &mu) in eigenvalues.iter().enumerate() {
        let mut y = inverse_iteration(&d, &e, mu);
        // Re-orthogonalize against close neighbours (weight inner product
        // is plain in y-space).
        for j in 0..k {
            if (eigenvalues[j] - mu).abs() < 1e-6 * (1.0 + mu.abs()) {
                let dot: f64 = y.iter().zip(&ys[j]).map(|(a, b)| a * b).sum();
                for (yi, oj) in y.iter_mut().zip(&ys[j]) {
                    *yi -= dot * oj;
                }
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut y {
            *v /= norm;
        }
        ys.push(y);
    }
    let eigenfunctions: Vec<GridFunction> = ys
        .iter()
        .map(|y| {
            let values: Vec<f64> = y.iter().zip(&inv_sqrt).map(|(v, s)| v * s).collect();
            let trace_left = grid.extrapolate_trace(&values, crate::profile::Side::Left);
            let trace_right = grid.extrapolate_trace(&values, crate::profile::Side::Right);
            GridFunction {
                values,
                trace_left,
                trace_right,
            }
        })
        .collect();

    // Two-grid error estimate.
    let error_estimates = if m / 2 >= 16 {
        let coarse_grid = Grid::build(profile, m / 2, Some(grid.graded))?;
        let coarse_forms = assemble(profile, &coarse_grid)?;
        let coarse = eigenvalues_on(&coarse_forms, count);
        eigenvalues
            .iter()
            .zip(&coarse)
            .map(|(f, c)| (f - c).abs() / 3.0)
            .collect()
    } else {
        vec![f64::NAN; count]
    };

    Ok(SpectrumResult {
        eigenvalues,
        eigenfunctions,
        cells: m,
        graded: grid.graded,
        error_estimates,
    })
}

/// Richardson-extrapolated eigenvalues from solves at `cells` and
/// `cells / 2` (second-order scheme: (4 mu_h - mu_2h) / 3).
pub fn richardson_eigenvalues(
    profile: &IsoparametricProfile,
    cells: usize,
    count: usize,
    grading: Option<bool>,
) -> Result<Vec<f64>> {
    let fine_grid = Grid::build(profile, cells, grading)?;
    let coarse_grid = Grid::build(profile, cells / 2, grading)?;
    let fine = eigenvalues_on(&assemble(profile, &fine_grid)?, count);
    let coarse = eigenvalues_on(&assemble(profile, &coarse_grid)?, count);
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect())
}

/// Sign of an eigenvalue with a tolerance band around zero.
fn sign_of(lambda: f64, scale: f64) -> i8 {
    let tol = 1e-8 * scale.max(1.0);
    if lambda > tol {
        1
    } else if lambda < -tol {
        -1
    } else {
        0
    }
}

/// First eigenvalues of the three conformal probes, radial-restricted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeResult {
    /// L_g u = lambda u with zero boundary traces.
    pub lambda_dirichlet: f64,
    /// L_g u = 0 with B_g u = lambda u on the boundary (Steklov-type).
    pub lambda_steklov: f64,
    /// L_g u = lambda u with B_g u = 0 (Robin).
    pub lambda_robin: f64,
    pub sign_dirichlet: i8,
    pub sign_steklov: i8,
    pub sign_robin: i8,
    /// Whether the nonzero signs agree (the sign chain of the invariants).
    pub signs_consistent: bool,
    /// Certified when the Steklov sign is nonnegative.
    pub y_tilde_certified_finite: bool,
    /// Raised when the Dirichlet probe is negative, in which case the
    /// boundary quotient infimum may be unbounded below.
    pub y_tilde_possibly_minus_infinity: bool,
    /// Steklov reduction failed (radial conformal Laplacian not invertible
    /// under Dirichlet closure); flagged, not fatal.
    pub steklov_degenerate: bool,
    /// These are infima over radial functions only: upper bounds for the
    /// full invariants.
    pub scope: String,
}

/// Runs the three radial conformal eigenvalue probes on one grid.
pub fn conformal_eigen_probe(
    profile: &IsoparametricProfile,
    grid: &Grid,
) -> Result<ProbeResult> {
    if profile.dim < 3 {
        return Err(CoreError::DimensionTooLow(profile.dim));
    }
    let forms = assemble(profile, grid)?;
    let an = forms.a_n()?;
    let bf = forms.boundary_factor();
    let m = forms.cells();

    // Base cells-only operator a_n * flux + curvature mass, no closure.
    let (raw, masses) = forms.neumann_pencil();
    let mut base = Tridiag::zeros(m);
    for i in 0..m {
        base.diag[i] = an * raw.diag[i] + forms.cell_curvature[i];
    }
    for i in 0..m - 1 {
        base.lower[i] = an * raw.lower[i];
        base.upper[i] = an * raw.upper[i];
    }

    // Dirichlet closure: trace pinned to zero adds the half-edge
    // conductance to the adjacent cell.
    let mut dirichlet = base.clone();
    if let Some(b) = &forms.left {
        dirichlet.diag[0] += an * b.conductance;
    }
    if let Some(b) = &forms.right {
        dirichlet.diag[m - 1] += an * b.conductance;
    }
    let (d, e) = symmetric_pencil(&dirichlet, &masses);
    let lambda_dirichlet = smallest_eigenvalues(&d, &e, 1)[0];

    // Robin closure B_g u = 0: eliminate the trace stationarity
    // (series combination of the half edge and the curvature term).
    let mut robin = base.clone();
    let mut robin_ok = true;
    for (is_left, term) in [(true, &forms.left), (false, &forms.right)] {
        if let Some(b) = term {
            let k = an * b.conductance;
            let h = bf * b.mean_curvature * b.area;
            let denom = k + h;
            if denom <= 0.0 {
                robin_ok = false;
                continue;
            }
            let idx = if is_left { 0 } else { m - 1 };
            robin.diag[idx] += k * h / denom;
        }
    }
    let lambda_robin = if robin_ok {
        let (d, e) = symmetric_pencil(&robin, &masses);
        smallest_eigenvalues(&d, &e, 1)[0]
    } else {
        f64::NEG_INFINITY
    };

    // Steklov-type reduction: Schur-complement the conformal operator onto
    // the boundary traces; size = number of boundary components.
    let traces: Vec<usize> = {
        let mut v = Vec::new();
        if forms.left.is_some() {
            v.push(0usize);
        }
        if forms.right.is_some() {
            v.push(forms.dof_count() - 1);
        }
        v
    };
    // Interior block is exactly `dirichlet` (trace rows/cols removed).
    let lu = dirichlet.lu();
    let pivot_scale = dirichlet
        .diag
        .iter()
        .fold(0.0f64, |mx, v| mx.max(v.abs()));
    let steklov_degenerate = lu.min_pivot < 1e-12 * pivot_scale.max(1.0);
    let mut lambda_steklov = f64::NAN;
    if !steklov_degenerate {
        let t = traces.len();
        // K_tc columns: coupling of each trace into the cell block.
        let mut schur = vec![vec![0.0; t]; t];
        let mut n_diag = vec![0.0; t];
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(t);
        for (j, &tr) in traces.iter().enumerate() {
            let mut col = vec![0.0; m];
            let (k_tt, area) = if tr == 0 {
                let b = forms.left.as_ref().unwrap();
                col[0] = -an * b.conductance;
                (
                    an * b.conductance + bf * b.mean_curvature * b.area,
                    b.area,
                )
            } else {
                let b = forms.right.as_ref().unwrap();
                col[m - 1] = -an * b.conductance;
                (
                    an * b.conductance + bf * b.mean_curvature * b.area,
                    b.area,
                )
            };
            let z = lu.solve(&col);
            schur[j][j] = k_tt;
            n_diag[j] = bf * area;
            cols.push(z);
        }
        for j in 0..traces.len() {
            for l in 0..traces.len() {
                let col_l = {
                    let mut c = vec![0.0; m];
                    if traces[l] == 0 {
                        c[0] = -an * forms.left.as_ref().unwrap().conductance;
                    } else {
                        c[m - 1] = -an * forms.right.as_ref().unwrap().conductance;
                    }
                    c
                };
                let dot: f64 = col_l.iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                schur[l][j] -= dot;
            }
        }
        lambda_steklov = match traces.len() {
            1 => schur[0][0] / n_diag[0],
            2 => {
                // Generalized symmetric 2x2 pencil.
                let (s00, s01, s11) = (schur[0][0], 0.5 * (schur[0][1] + schur[1][0]), schur[1][1]);
                let (n0, n1) = (n_diag[0], n_diag[1]);
                let a2 = n0 * n1;
                let b2 = -(s00 * n1 + s11 * n0);
                let c2 = s00 * s11 - s01 * s01;
                let disc = (b2 * b2 - 4.0 * a2 * c2).max(0.0).sqrt();
                ((-b2 - disc) / (2.0 * a2)).min((-b2 + disc) / (2.0 * a2))
            }
            _ => f64::NAN,
        };
    }

    let scale = lambda_dirichlet
        .abs()
        .max(lambda_robin.abs())
        .max(if lambda_steklov.is_finite() {
            lambda_steklov.abs()
        } else {
            0.0
        });
    let sign_dirichlet = sign_of(lambda_dirichlet, scale);
    let sign_robin = if lambda_robin.is_finite() {
        sign_of(lambda_robin, scale)
    } else {
        -1
    };
    let sign_steklov = if lambda_steklov.is_finite() {
        sign_of(lambda_steklov, scale)
    } else {
        0
    };
    let nonzero: Vec<i8> = [sign_dirichlet, sign_steklov, sign_robin]
        .into_iter()
        .filter(|s| *s != 0)
        .collect();
    let signs_consistent = nonzero.windows(2).all(|w| w[0] == w[1]);

    Ok(ProbeResult {
        lambda_dirichlet,
        lambda_steklov,
        lambda_robin,
        sign_dirichlet,
        sign_steklov,
        sign_robin,
        signs_consistent,
        y_tilde_certified_finite: sign_steklov >= 0 && !steklov_degenerate,
        y_tilde_possibly_minus_infinity: sign_dirichlet < 0,
        steklov_degenerate,
        scope: "radial-restricted".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{make_hemisphere, make_spherical_band};
    use crate::ScalarCurve;

    #[test]
    fn two_hemisphere_legendre_eigenvalues() {
        // S^2_+ radial Neumann spectrum: even Legendre l(l+1) = 0, 6, 20.
        let p = make_hemisphere(2).unwrap();
        let g = Grid::build(&p, 1024, None).unwrap();
        let s = neumann_spectrum(&p, &g, 3).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-10, "mu0 = {}", s.eigenvalues[0]);
        assert!((s.eigenvalues[1] - 6.0).abs() < 2e-4, "mu1 = {}", s.eigenvalues[1]);
        assert!((s.eigenvalues[2] - 20.0).abs() < 2e-3, "mu2 = {}", s.eigenvalues[2]);
        // Constant ground state.
        let f0 = &s.eigenfunctions[0];
        let dev = f0
            .values
            .iter()
            .map(|v| (v - f0.values[0]).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9 * f0.values[0].abs());
    }

    #[test]
    fn three_hemisphere_mu1_richardson() {
        let p = make_hemisphere(3).unwrap();
        let mus = richardson_eigenvalues(&p, 2000, 3, None).unwrap();
        assert!(
            (mus[1] - 8.0).abs() / 8.0 < 1e-5,
            "extrapolated mu1 = {}",
            mus[1]
        );
        assert!((mus[2] - 24.0).abs() / 24.0 < 1e-4, "mu2 = {}", mus[2]);
    }

    #[test]
    fn second_order_eigenvalue_convergence() {
        let p = make_hemisphere(3).unwrap();
        let mut errs = Vec::new();
        for &m in &[250usize, 500, 1000] {
            let g = Grid::build(&p, m, None).unwrap();
            let s = neumann_spectrum(&p, &g, 2).unwrap();
            errs.push((s.eigenvalues[1] - 8.0).abs());
        }
        let slope1 = (errs[0] / errs[1]).ln() / 2.0f64.ln();
        let slope2 = (errs[1] / errs[2]).ln() / 2.0f64.ln();
        assert!(
            slope1 > 1.9 && slope2 > 1.9,
            "slopes {slope1:.2}, {slope2:.2}, errors {errs:?}"
        );
    }

    #[test]
    fn orthonormality_and_simplicity() {
        let p = make_spherical_band(3, -0.6, 0.4).unwrap();
        let g = Grid::build(&p, 600, None).unwrap();
        let s = neumann_spectrum(&p, &g, 5).unwrap();
        let forms = assemble(&p, &g).unwrap();
        for i in 0..5 {
            for j in 0..=i {
                let dot: f64 = s.eigenfunctions[i]
                    .values
                    .iter()
                    .zip(&s.eigenfunctions[j].values)
                    .zip(&forms.grid.cell_weights)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (dot - expect).abs() < 1e-10,
                    "<e{i}, e{j}>_w = {dot}"
                );
            }
            if i > 0 {
                let gap = s.eigenvalues[i] - s.eigenvalues[i - 1];
                let err = s.error_estimates[i].max(s.error_estimates[i - 1]);
                assert!(gap > 10.0 * err, "gap {gap} vs est error {err}");
            }
        }
    }

    #[test]
    fn probe_signs_on_positive_curvature_hemisphere() {
        let p = make_hemisphere(3).unwrap();
        let g = Grid::build(&p, 512, None).unwrap();
        let probe = conformal_eigen_probe(&p, &g).unwrap();
        assert_eq!(probe.sign_dirichlet, 1, "{probe:?}");
        assert_eq!(probe.sign_robin, 1, "{probe:?}");
        assert_eq!(probe.sign_steklov, 1, "{probe:?}");
        assert!(probe.signs_consistent);
        assert!(probe.y_tilde_certified_finite);
        assert!(!probe.y_tilde_possibly_minus_infinity);
    }

    #[test]
    fn probe_zero_curvature_robin_is_zero() {
        let mut p = make_spherical_band(3, -0.5, 0.5).unwrap();
        p.s = ScalarCurve::constant(0.0);
        // Minimal boundary for the test: zero the cap curvatures.
        if let crate::profile::Endpoint::Boundary(b) = &mut p.left {
            b.mean_curvature = 0.0;
        }
        if let crate::profile::Endpoint::Boundary(b) = &mut p.right {
            b.mean_curvature = 0.0;
        }
        let g = Grid::build(&p, 256, None).unwrap();
        let probe = conformal_eigen_probe(&p, &g).unwrap();
        assert_eq!(probe.sign_robin, 0, "lambda_L = {}", probe.lambda_robin);
        assert!(probe.lambda_robin.abs() < 1e-9);
        assert!(probe.lambda_dirichlet > 0.0);
    }

    #[test]
    fn probe_strongly_negative_curvature() {
        let mut p = make_hemisphere(3).unwrap();
        p.s = ScalarCurve::constant(-60.0);
        let g = Grid::build(&p, 256, None).unwrap();
        let probe = conformal_eigen_probe(&p, &g).unwrap();
        assert_eq!(probe.sign_dirichlet, -1);
        assert!(probe.y_tilde_possibly_minus_infinity);
        assert!(!probe.y_tilde_certified_finite);
    }
}
