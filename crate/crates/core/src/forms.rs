//! Assembled quadratic forms of the reduced energy
//! E(u) = int a_n b (u')^2 + s_g u^2 w dt + 2(n-1) sum_j h_j A_j u(r_j)^2
//! on the staggered grid.
//!
//! The stiffness is the flux form of -(b w u')' with conductances at cell
//! edges; boundary traces are genuine unknowns coupled through the half
//! cells, so the Robin conditions of the variational problems arise as
//! natural conditions. Focal endpoints receive no coupling: the vanishing
//! flux b w -> 0 encodes regularity there.

use crate::error::{CoreError, Result};
use crate::exponents::a_n;
use crate::grid::{gl16, Grid, GridFunction};
use crate::linalg::Tridiag;
use crate::profile::{IsoparametricProfile, QuotientMode, Side};
use crate::quad;

/// Per-component boundary data of the assembled energy.
#[derive(Debug, Clone)]
pub struct BoundaryTerm {
    pub param: f64,
    pub orientation: f64,
    pub mean_curvature: f64,
    /// Boundary measure w(r) sqrt(b(r)).
    pub area: f64,
    pub sqrt_b: f64,
    /// Half-edge conductance (b w)(r) / |c_adjacent - r|.
    pub conductance: f64,
    pub half_width: f64,
}

/// Discretized energy pieces of E(u) on a fixed grid.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub dim: usize,
    pub grid: Grid,
    /// Interior-node conductances (b w)(x_j)/(c_j - c_{j-1}), j = 1..m-1.
    pub conductance: Vec<f64>,
    /// Per-cell curvature mass integrals int_cell s_g w dt.
    pub cell_curvature: Vec<f64>,
    pub left: Option<BoundaryTerm>,
    pub right: Option<BoundaryTerm>,
}

/// Builds the forms for a usable profile on a compatible grid.
pub fn assemble(profile: &IsoparametricProfile, grid: &Grid) -> Result<AssembledForms> {
    profile.require_usable()?;
    let (ta, tb) = profile.interval;
    let (ga, gb) = grid.interval();
    let width = tb - ta;
    if (ga - ta).abs() > 1e-12 * width || (gb - tb).abs() > 1e-12 * width {
        return Err(CoreError::Domain(
            "grid interval does not match profile interval".into(),
        ));
    }
    let w = &grid.weight;
    let bw = |t: f64| profile.b.eval(t) * w.eval(t);
    let m = grid.cell_count();
    let conductance: Vec<f64> = (1..m)
        .map(|j| bw(grid.nodes[j]) / (grid.centers[j] - grid.centers[j - 1]))
        .collect();
    let rule = gl16();
    let cell_curvature: Vec<f64> = grid
        .nodes
        .windows(2)
        .map(|win| {
            quad::panel_integrate(rule, |t| profile.s.eval(t) * w.eval(t), win[0], win[1])
        })
        .collect();
    let boundary = |side: Side| -> Option<BoundaryTerm> {
        let comp = profile.endpoint(side).as_boundary()?;
        let r = comp.param;
        let half_width = match side {
            Side::Left => grid.centers[0] - r,
            Side::Right => r - grid.centers[m - 1],
        };
        let bv = profile.b.eval(r);
        Some(BoundaryTerm {
            param: r,
            orientation: comp.orientation,
            mean_curvature: comp.mean_curvature,
            area: w.eval(r) * bv.sqrt(),
            sqrt_b: bv.sqrt(),
            conductance: bw(r) / half_width,
            half_width,
        })
    };
    Ok(AssembledForms {
        dim: profile.dim,
        grid: grid.clone(),
        conductance,
        cell_curvature,
        left: boundary(Side::Left),
        right: boundary(Side::Right),
    })
}

impl AssembledForms {
    pub fn cells(&self) -> usize {
        self.grid.cell_count()
    }

    /// Conformal coefficient; errors below dimension 3.
    pub fn a_n(&self) -> Result<f64> {
        if self.dim < 3 {
            return Err(CoreError::DimensionTooLow(self.dim));
        }
        Ok(a_n(self.dim))
    }

    pub fn boundary_factor(&self) -> f64 {
        2.0 * (self.dim as f64 - 1.0)
    }

    pub fn volume(&self) -> f64 {
        self.grid.total_weight()
    }

    pub fn boundary_terms(&self) -> Vec<&BoundaryTerm> {
        [self.left.as_ref(), self.right.as_ref()]
            .into_iter()
            .flatten()
            .collect()
    }

    /// Weighted stiffness quadratic form int b (phi')^2 w dt, including the
    /// half-edge coupling of boundary traces.
    pub fn raw_stiffness(&self, f: &GridFunction) -> f64 {
        let v = &f.values;
        let mut acc = 0.0;
        for (j, k) in self.conductance.iter().enumerate() {
            let d = v[j + 1] - v[j];
            acc += k * d * d;
        }
        if let Some(b) = &self.left {
            let d = v[0] - f.trace_left;
            acc += b.conductance * d * d;
        }
        if let Some(b) = &self.right {
            let d = f.trace_right - v[v.len() - 1];
            acc += b.conductance * d * d;
        }
        acc
    }

    /// Curvature mass int s_g phi^2 w dt (mass-lumped at cell centers).
    pub fn curvature_mass(&self, f: &GridFunction) -> f64 {
        self.cell_curvature
            .iter()
            .zip(&f.values)
            .map(|(s, v)| s * v * v)
            .sum()
    }

    /// Plain mass int phi^2 w dt.
    pub fn mass(&self, f: &GridFunction) -> f64 {
        self.grid
            .cell_weights
            .iter()
            .zip(&f.values)
            .map(|(w, v)| w * v * v)
            .sum()
    }

    /// Interior s-norm integral int |phi|^s w dt (mass-lumped).
    pub fn interior_lp(&self, f: &GridFunction, s: f64) -> f64 {
        self.grid
            .cell_weights
            .iter()
            .zip(&f.values)
            .map(|(w, v)| w * v.abs().powf(s))
            .sum()
    }

    /// Boundary s-norm integral sum_j A_j |tau_j|^s.
    pub fn boundary_lp(&self, f: &GridFunction, s: f64) -> f64 {
        let mut acc = 0.0;
        if let Some(b) = &self.left {
            acc += b.area * f.trace_left.abs().powf(s);
        }
        if let Some(b) = &self.right {
            acc += b.area * f.trace_right.abs().powf(s);
        }
        acc
    }

    /// Full energy E(phi). Needs dimension >= 3 for the conformal factor.
    pub fn energy(&self, f: &GridFunction) -> Result<f64> {
        let an = self.a_n()?;
        let mut acc = an * self.raw_stiffness(f) + self.curvature_mass(f);
        let bf = self.boundary_factor();
        if let Some(b) = &self.left {
            acc += bf * b.mean_curvature * b.area * f.trace_left * f.trace_left;
        }
        if let Some(b) = &self.right {
            acc += bf * b.mean_curvature * b.area * f.trace_right * f.trace_right;
        }
        Ok(acc)
    }

    /// Quotient value J^s (interior) or Q^s (boundary): E / (norm)^{2/s}.
    pub fn quotient(&self, f: &GridFunction, s: f64, mode: QuotientMode) -> Result<f64> {
        if !(s >= 1.0) {
            return Err(CoreError::Domain(format!("exponent s = {s} must be >= 1")));
        }
        let e = self.energy(f)?;
        let denom = match mode {
            QuotientMode::Interior => self.interior_lp(f, s),
            QuotientMode::Boundary => {
                if self.left.is_none() && self.right.is_none() {
                    return Err(CoreError::Domain(
                        "boundary quotient needs a boundary component".into(),
                    ));
                }
                self.boundary_lp(f, s)
            }
        };
        if denom <= 0.0 || !denom.is_finite() {
            return Err(CoreError::ZeroDenominator("quotient"));
        }
        Ok(e / denom.powf(2.0 / s))
    }

    /// Number of trace unknowns (boundary components).
    pub fn trace_count(&self) -> usize {
        self.left.is_some() as usize + self.right.is_some() as usize
    }

    /// Degrees of freedom in the extended ordering
    /// [trace_left?, cells..., trace_right?].
    pub fn dof_count(&self) -> usize {
        self.cells() + self.trace_count()
    }

    pub fn pack(&self, f: &GridFunction) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dof_count());
        if self.left.is_some() {
            x.push(f.trace_left);
        }
        x.extend_from_slice(&f.values);
        if self.right.is_some() {
            x.push(f.trace_right);
        }
        x
    }

    /// Rebuilds a grid function; traces at focal endpoints are limit values
    /// extrapolated from the adjacent cells.
    pub fn unpack(&self, x: &[f64]) -> GridFunction {
        assert_eq!(x.len(), self.dof_count());
        let m = self.cells();
        let off = self.left.is_some() as usize;
        let values: Vec<f64> = x[off..off + m].to_vec();
        let trace_left = if self.left.is_some() {
            x[0]
        } else {
            self.grid.extrapolate_trace(&values, Side::Left)
        };
        let trace_right = if self.right.is_some() {
            x[x.len() - 1]
        } else {
            self.grid.extrapolate_trace(&values, Side::Right)
        };
        GridFunction {
            values,
            trace_left,
            trace_right,
        }
    }

    /// Index of a cell value in the extended DOF ordering.
    pub fn cell_dof(&self, i: usize) -> usize {
        i + self.left.is_some() as usize
    }

    /// Extended tridiagonal matrix of the energy Hessian / 2:
    /// a_n * stiffness + curvature mass + boundary curvature terms.
    pub fn energy_tridiag(&self) -> Result<Tridiag> {
        let an = self.a_n()?;
        let bf = self.boundary_factor();
        let n = self.dof_count();
        let m = self.cells();
        let mut t = Tridiag::zeros(n);
        // Cell-cell couplings.
        for (j, k) in self.conductance.iter().enumerate() {
            let (i0, i1) = (self.cell_dof(j), self.cell_dof(j + 1));
            t.diag[i0] += an * k;
            t.diag[i1] += an * k;
            t.lower[i0] -= an * k;
            t.upper[i0] -= an * k;
        }
        for i in 0..m {
            t.diag[self.cell_dof(i)] += self.cell_curvature[i];
        }
        if let Some(b) = &self.left {
            // DOF 0 is the left trace, coupled to cell 0.
            t.diag[0] += an * b.conductance + bf * b.mean_curvature * b.area;
            t.diag[1] += an * b.conductance;
            t.lower[0] -= an * b.conductance;
            t.upper[0] -= an * b.conductance;
        }
        if let Some(b) = &self.right {
            let last = n - 1;
            t.diag[last] += an * b.conductance + bf * b.mean_curvature * b.area;
            t.diag[last - 1] += an * b.conductance;
            t.lower[last - 1] -= an * b.conductance;
            t.upper[last - 1] -= an * b.conductance;
        }
        Ok(t)
    }

    /// Cells-only flux operator of the Neumann problem (zero flux at
    /// boundary nodes, natural at focal endpoints) together with the cell
    /// masses: the generalized pencil A x = mu W x of the reduced operator
    /// -b phi'' + a phi'.
    pub fn neumann_pencil(&self) -> (Tridiag, Vec<f64>) {
        let m = self.cells();
        let mut t = Tridiag::zeros(m);
        for (j, k) in self.conductance.iter().enumerate() {
            t.diag[j] += k;
            t.diag[j + 1] += k;
            t.lower[j] -= k;
            t.upper[j] -= k;
        }
        (t, self.grid.cell_weights.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{make_hemisphere, make_spherical_band};
    use std::f64::consts::PI;

    #[test]
    fn constant_energy_is_curvature_volume() {
        // E(1) on the 3-hemisphere: s_g vol = 6 pi^2; the minimal equator
        // contributes nothing.
        let p = make_hemisphere(3).unwrap();
        let g = Grid::build(&p, 256, None).unwrap();
        let f = assemble(&p, &g).unwrap();
        let one = GridFunction::constant(&g, 1.0);
        let e = f.energy(&one).unwrap();
        assert!((e - 6.0 * PI * PI).abs() < 1e-6 * 6.0 * PI * PI, "E = {e}");
        assert!(f.raw_stiffness(&one).abs() < 1e-12);
    }

    #[test]
    fn boundary_area_is_unit_two_sphere() {
        let p = make_hemisphere(3).unwrap();
        let g = Grid::build(&p, 64, None).unwrap();
        let f = assemble(&p, &g).unwrap();
        let b = f.left.as_ref().unwrap();
        assert!((b.area - 4.0 * PI).abs() < 1e-10);
        assert!(f.right.is_none());
    }

    #[test]
    fn constant_quotients_close_form() {
        let p = make_hemisphere(3).unwrap();
        let g = Grid::build(&p, 512, None).unwrap();
        let f = assemble(&p, &g).unwrap();
        let one = GridFunction::constant(&g, 1.0);
        // Interior, s = p_3 = 6: 6 pi^2 / (pi^2)^{1/3}.
        let j = f.quotient(&one, 6.0, QuotientMode::Interior).unwrap();
        let exact = 6.0 * PI * PI / (PI * PI).powf(1.0 / 3.0);
        assert!((j - exact).abs() < 1e-5 * exact, "J = {j}, exact = {exact}");
        // Boundary, s = 4: 6 pi^2 / sqrt(4 pi).
        let q = f.quotient(&one, 4.0, QuotientMode::Boundary).unwrap();
        let exact = 6.0 * PI * PI / (4.0 * PI).sqrt();
        assert!((q - exact).abs() < 1e-5 * exact);
        // Homogeneity of degree zero.
        let mut two = one.clone();
        two.scale(2.0);
        let j2 = f.quotient(&two, 6.0, QuotientMode::Interior).unwrap();
        assert!((j - j2).abs() < 1e-12 * j.abs());
    }

    #[test]
    fn scale_covariance_of_quotients() {
        // Multiplying the weight by kappa scales quotients by kappa^{1-2/s}.
        let p = make_spherical_band(3, -0.4, 0.6).unwrap();
        let kappa = 2.75;
        let ps = p.with_weight_scaled(kappa).unwrap();
        let g = Grid::build(&p, 128, None).unwrap();
        let gs = Grid::build(&ps, 128, None).unwrap();
        let f = assemble(&p, &g).unwrap();
        let fs = assemble(&ps, &gs).unwrap();
        let test = GridFunction::from_fn(&g, |t| 1.0 + 0.3 * t + 0.2 * t * t);
        for (s, mode) in [
            (4.0, QuotientMode::Interior),
            (6.0, QuotientMode::Interior),
            (3.0, QuotientMode::Boundary),
        ] {
            let q0 = f.quotient(&test, s, mode).unwrap();
            let q1 = fs.quotient(&test, s, mode).unwrap();
            let factor = kappa.powf(1.0 - 2.0 / s);
            assert!(
                (q1 - factor * q0).abs() < 1e-12 * q0.abs().max(1.0),
                "s={s} {mode}: {q1} vs {}",
                factor * q0
            );
        }
    }

    #[test]
    fn energy_tridiag_matches_quadratic_form() {
        let p = make_spherical_band(3, -0.5, 0.5).unwrap();
        let g = Grid::build(&p, 48, None).unwrap();
        let f = assemble(&p, &g).unwrap();
        let test = GridFunction::from_fn(&g, |t| (1.3 * t).sin() + 1.5);
        let x = f.pack(&test);
        let t = f.energy_tridiag().unwrap();
        let tx = t.apply(&x);
        let xtx: f64 = x.iter().zip(&tx).map(|(a, b)| a * b).sum();
        let e = f.energy(&test).unwrap();
        assert!((xtx - e).abs() < 1e-10 * e.abs().max(1.0));
    }

    #[test]
    fn second_order_energy_convergence() {
        // Richardson slope of E(phi) for a smooth phi on a band without
        // focal endpoints.
        let p = make_spherical_band(3, -0.5, 0.5).unwrap();
        let phi = |t: f64| (1.0 + t).powf(1.7);
        let mut errs = Vec::new();
        let cells = [64usize, 128, 256, 512];
        // Reference from a very fine grid.
        let gref = Grid::build(&p, 8192, None).unwrap();
        let fref = assemble(&p, &gref).unwrap();
        let eref = fref.energy(&GridFunction::from_fn(&gref, phi)).unwrap();
        for &m in &cells {
            let g = Grid::build(&p, m, None).unwrap();
            let f = assemble(&p, &g).unwrap();
            let e = f.energy(&GridFunction::from_fn(&g, phi)).unwrap();
            errs.push((e - eref).abs());
        }
        // Least-squares slope in log-log.
        let slope = {
            let xs: Vec<f64> = cells.iter().map(|&m| (m as f64).ln()).collect();
            let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
            let n = xs.len() as f64;
            let sx: f64 = xs.iter().sum();
            let sy: f64 = ys.iter().sum();
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            -(n * sxy - sx * sy) / (n * sxx - sx * sx)
        };
        assert!(slope >= 1.9, "convergence slope {slope}, errors {errs:?}");
    }
}
