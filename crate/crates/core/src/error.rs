use thiserror::Error;

/// Errors surfaced by geometry, sampling, and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("box/field shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("site {0:?} is outside the domain")]
    OutOfDomain(Vec<i32>),

    #[error("dynamics diverged: |phi({site:?})| = {value:.3e} exceeds guard {guard:.3e}")]
    Divergence {
        site: Vec<i32>,
        value: f64,
        guard: f64,
    },

    #[error(
        "linear solver failed to converge: residual {residual:.3e} after {iterations} iterations"
    )]
    SolverFailure { residual: f64, iterations: usize },

    #[error("matrix is not positive definite (check the disorder law support)")]
    NotPositiveDefinite,

    #[error(
        "plaquette condition violated: residual {residual:.3e} at base {base:?}, axes ({axis_a},{axis_b})"
    )]
    PlaquetteViolation {
        base: Vec<i32>,
        axis_a: usize,
        axis_b: usize,
        residual: f64,
    },

    #[error("walker mass {mass:.4} beyond the environment horizon exceeds the 1% budget")]
    HorizonMass { mass: f64 },

    #[error("distance series does not decay (fitted slope {slope:.3e} >= 0)")]
    NonDecay { slope: f64 },

    #[error("disorder ensemble too small: {got} < {need}")]
    EnsembleTooSmall { got: usize, need: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
