//! Radial reduction of Yamabe-type problems on compact manifolds with
//! boundary that carry an isoparametric function.
//!
//! A manifold with such a function collapses, for every computation on
//! functions constant along level sets, to a one-dimensional profile:
//! the interval of function values, the reduced data a(t), b(t), the scalar
//! curvature s_g(t), endpoint structure and a weight density. This crate
//! provides the profile type and its model factories, a finite-volume
//! discretization of the reduced energy, Neumann spectra of the reduced
//! operator, subcritical quotient minimization with an independent shooting
//! cross-check, the constrained prescribed-mean-curvature problem, and
//! bifurcation analysis with branch continuation for Riemannian products.

pub mod bifurcation;
pub mod curve;
pub mod error;
pub mod exponents;
pub mod forms;
pub mod grid;
pub mod hanli;
pub mod linalg;
pub mod ode;
pub mod profile;
pub mod quad;
pub mod spectra;
pub mod yamabe;

pub use curve::{CubicSpline, ScalarCurve};
pub use error::{CoreError, Result};
pub use forms::AssembledForms;
pub use grid::{Grid, GridFunction};
pub use profile::{
    conformal_change, make_cylinder_demo, make_hemisphere, make_product, make_spherical_band,
    profile_from_json, profile_to_json, BoundaryComponent, Endpoint, FocalEndpoint,
    IsoparametricProfile, QuotientMode, Side, Threshold, ValidationReport, WeightNorm,
};
pub use spectra::SpectrumResult;
pub use yamabe::SolveReport;
