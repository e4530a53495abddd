//! Error type shared by all toolkit operations.

use thiserror::Error;

/// Errors produced by profile construction, discretization and solvers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A curve table or analytic form is structurally invalid.
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    /// A factory or constructor precondition was violated.
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    /// The profile failed validation; the list names the violated invariants.
    #[error("profile not usable: {}", .0.join("; "))]
    UnusableProfile(Vec<String>),

    /// An operation was requested at a critical (focal) level.
    #[error("singular level at t = {t}")]
    SingularLevel { t: f64 },

    /// The gradient norm vanishes too fast for the line integral to converge.
    #[error("non-integrable singularity of 1/sqrt(b) at t = {t}")]
    NonIntegrableSingularity { t: f64 },

    /// Generic domain error (argument outside the operation's precondition).
    #[error("{0}")]
    Domain(String),

    /// The requested exponent is not admissible for this profile.
    #[error("exponent s = {s} not admissible in {mode} mode (threshold {threshold})")]
    NotAdmissible {
        s: f64,
        mode: &'static str,
        threshold: String,
    },

    /// Conformal-exponent machinery requires dimension at least 3.
    #[error("operation requires manifold dimension >= 3, got {0}")]
    DimensionTooLow(usize),

    /// Grid construction rejected the requested resolution.
    #[error("grid too coarse: {requested} cells, minimum {minimum}")]
    GridTooCoarse { requested: usize, minimum: usize },

    /// An iterative solver failed to converge.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Shooting Newton iteration diverged; carries the final boundary mismatch.
    #[error("shooting did not converge; final boundary mismatch {mismatch:.3e}")]
    NewtonDivergence { mismatch: f64 },

    /// A quotient or normalization denominator vanished.
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    /// Profile file parsing failed.
    #[error("profile file: {0}")]
    ProfileFile(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
