//! Staggered finite-volume grid over the profile interval and functions
//! sampled at cell centers with endpoint traces.

use serde::{Deserialize, Serialize};

use crate::curve::ScalarCurve;
use crate::error::{CoreError, Result};
use crate::profile::{IsoparametricProfile, Side};
use crate::quad;

use std::sync::OnceLock;

/// Fixed Gauss–Legendre rule shared by all per-cell integrals.
pub(crate) fn gl16() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| quad::gauss_legendre(16))
}

/// Cell-edge/cell-center grid with per-cell weight integrals.
///
/// Cells are graded toward focal endpoints (clustering exponent 1 + 2 nu)
/// so the degenerate weight mass is resolved; with no focal endpoint the
/// grid is uniform.
#[derive(Debug, Clone)]
pub struct Grid {
    /// Cell edges, strictly increasing, first/last at the interval ends.
    pub nodes: Vec<f64>,
    /// Cell midpoints.
    pub centers: Vec<f64>,
    /// Exactly integrated (fixed-order panel) cell weight masses.
    pub cell_weights: Vec<f64>,
    pub graded: bool,
    /// Weight curve the masses were computed from.
    pub weight: ScalarCurve,
}

impl Grid {
    /// Builds a grid with `m_cells` cells. `grading`: `None` grades exactly
    /// when a focal endpoint is present.
    pub fn build(
        profile: &IsoparametricProfile,
        m_cells: usize,
        grading: Option<bool>,
    ) -> Result<Grid> {
        if m_cells < 16 {
            return Err(CoreError::GridTooCoarse {
                requested: m_cells,
                minimum: 16,
            });
        }
        profile.require_usable()?;
        let (ta, tb) = profile.interval;
        let len = tb - ta;
        let focal_side = if profile.left.as_focal().is_some() {
            Some(Side::Left)
        } else if profile.right.as_focal().is_some() {
            Some(Side::Right)
        } else {
            None
        };
        let graded = grading.unwrap_or(focal_side.is_some()) && focal_side.is_some();
        let gamma = if graded {
            let side = focal_side.unwrap();
            let nu = profile
                .endpoint(side)
                .as_focal()
                .map(|f| f.vanishing_order)
                .unwrap_or(0.0);
            (1.0 + 2.0 * nu).clamp(1.0, 4.0)
        } else {
            1.0
        };
        let mut nodes = Vec::with_capacity(m_cells + 1);
        for i in 0..=m_cells {
            let xi = i as f64 / m_cells as f64;
            let t = match (graded, focal_side) {
                (true, Some(Side::Right)) => ta + len * (1.0 - (1.0 - xi).powf(gamma)),
                (true, Some(Side::Left)) => ta + len * xi.powf(gamma),
                _ => ta + len * xi,
            };
            nodes.push(t);
        }
        nodes[0] = ta;
        nodes[m_cells] = tb;
        let centers: Vec<f64> = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let weight = profile.weight_curve()?;
        let rule = gl16();
        let cell_weights: Vec<f64> = nodes
            .windows(2)
            .map(|w| quad::panel_integrate(rule, |t| weight.eval(t), w[0], w[1]))
            .collect();
        if cell_weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(CoreError::SolverFailure(
                "non-positive cell weight integral".into(),
            ));
        }
        Ok(Grid {
            nodes,
            centers,
            cell_weights,
            graded,
            weight,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.centers.len()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    /// Sum of the cell weight masses (the discrete volume).
    pub fn total_weight(&self) -> f64 {
        self.cell_weights.iter().sum()
    }

    /// Quadratic extrapolation of center values to an interval endpoint.
    pub fn extrapolate_trace(&self, values: &[f64], side: Side) -> f64 {
        let m = self.centers.len();
        assert_eq!(values.len(), m);
        let (idx, t): ([usize; 3], f64) = match side {
            Side::Left => ([0, 1, 2], self.nodes[0]),
            Side::Right => ([m - 1, m - 2, m - 3], *self.nodes.last().unwrap()),
        };
        let mut acc = 0.0;
        for j in 0..3 {
            let mut l = 1.0;
            for k in 0..3 {
                if k != j {
                    l *= (t - self.centers[idx[k]]) / (self.centers[idx[j]] - self.centers[idx[k]]);
                }
            }
            acc += values[idx[j]] * l;
        }
        acc
    }

    /// One-sided quadratic estimate of the derivative at an endpoint.
    pub fn endpoint_derivative(&self, values: &[f64], side: Side) -> f64 {
        let m = self.centers.len();
        let (idx, t): ([usize; 3], f64) = match side {
            Side::Left => ([0, 1, 2], self.nodes[0]),
            Side::Right => ([m - 1, m - 2, m - 3], *self.nodes.last().unwrap()),
        };
        let mut acc = 0.0;
        for j in 0..3 {
            let mut dl = 0.0;
            for n in 0..3 {
                if n == j {
                    continue;
                }
                let mut term = 1.0 / (self.centers[idx[j]] - self.centers[idx[n]]);
                for k in 0..3 {
                    if k != j && k != n {
                        term *= (t - self.centers[idx[k]])
                            / (self.centers[idx[j]] - self.centers[idx[k]]);
                    }
                }
                dl += term;
            }
            acc += values[idx[j]] * dl;
        }
        acc
    }
}

/// Values at cell centers plus the two endpoint traces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub trace_left: f64,
    pub trace_right: f64,
}

impl GridFunction {
    pub fn constant(grid: &Grid, c: f64) -> GridFunction {
        GridFunction {
            values: vec![c; grid.cell_count()],
            trace_left: c,
            trace_right: c,
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Grid, f: F) -> GridFunction {
        let (ta, tb) = grid.interval();
        GridFunction {
            values: grid.centers.iter().map(|&t| f(t)).collect(),
            trace_left: f(ta),
            trace_right: f(tb),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .chain([&self.trace_left, &self.trace_right])
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .chain([&self.trace_left, &self.trace_right])
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn sup_norm(&self) -> f64 {
        self.max_value().max(-self.min_value())
    }

    pub fn scale(&mut self, k: f64) {
        for v in &mut self.values {
            *v *= k;
        }
        self.trace_left *= k;
        self.trace_right *= k;
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        let mut d: f64 = (self.trace_left - other.trace_left).abs();
        d = d.max((self.trace_right - other.trace_right).abs());
        for (a, b) in self.values.iter().zip(&other.values) {
            d = d.max((a - b).abs());
        }
        d
    }

    /// Pointwise absolute value (quotients are even in the argument).
    pub fn abs(&self) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| v.abs()).collect(),
            trace_left: self.trace_left.abs(),
            trace_right: self.trace_right.abs(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{make_hemisphere, make_spherical_band};
    use std::f64::consts::PI;

    #[test]
    fn hemisphere_grid_basics() {
        let p = make_hemisphere(3).unwrap();
        let g = Grid::build(&p, 64, None).unwrap();
        assert_eq!(g.nodes.len(), 65);
        assert_eq!(g.nodes[0], 0.0);
        assert_eq!(g.nodes[64], 1.0);
        assert!(g.graded);
        let vol = g.total_weight();
        assert!((vol - PI * PI).abs() < 1e-6, "vol = {vol}");
    }

    #[test]
    fn too_coarse_is_rejected() {
        let p = make_hemisphere(3).unwrap();
        assert!(matches!(
            Grid::build(&p, 8, None),
            Err(CoreError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn grading_beats_uniform_volume_error() {
        let p = make_hemisphere(3).unwrap();
        let exact = PI * PI;
        let graded = Grid::build(&p, 64, Some(true)).unwrap();
        let uniform = Grid::build(&p, 64, Some(false)).unwrap();
        let e_graded = (graded.total_weight() - exact).abs();
        let e_uniform = (uniform.total_weight() - exact).abs();
        assert!(
            e_graded <= 0.5 * e_uniform,
            "graded {e_graded:.3e} vs uniform {e_uniform:.3e}"
        );
    }

    #[test]
    fn band_grid_is_uniform_and_exact_volume() {
        let p = make_spherical_band(3, -0.5, 0.5).unwrap();
        let g = Grid::build(&p, 32, None).unwrap();
        assert!(!g.graded);
        // Closed form: 4 pi int_{-1/2}^{1/2} sqrt(1-t^2) dt.
        let exact = 4.0 * PI * (0.5f64 * (0.75f64).sqrt() + (0.5f64).asin());
        assert!((g.total_weight() - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn trace_extrapolation_is_second_order() {
        let p = make_hemisphere(3).unwrap();
        let g = Grid::build(&p, 128, None).unwrap();
        let f = |t: f64| 1.0 + t + 0.5 * t * t;
        let gf = GridFunction::from_fn(&g, f);
        let tl = g.extrapolate_trace(&gf.values, Side::Left);
        let tr = g.extrapolate_trace(&gf.values, Side::Right);
        assert!((tl - f(0.0)).abs() < 1e-12);
        assert!((tr - f(1.0)).abs() < 1e-12);
        let dl = g.endpoint_derivative(&gf.values, Side::Left);
        assert!((dl - 1.0).abs() < 1e-10);
    }
}
