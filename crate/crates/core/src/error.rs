use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Argument outside a function's domain (e.g. irregular Riccati
    /// functions at z = 0).
    #[error("domain error: {0}")]
    Domain(&'static str),

    /// e^{|Im z|} exceeds the representable range.
    #[error("overflow: |Im z| = {0} too large for double precision")]
    Overflow(f64),

    /// A renormalization step of the propagator met a non-invertible matrix.
    #[error("singular propagation at grid node {node}")]
    SingularPropagation { node: usize },

    /// The matching system for the S-matrix extraction is numerically
    /// singular (matching radii too close or a pathological k).
    #[error("singular matching system at k = {k}")]
    SingularMatching { k: num_complex::Complex64 },

    /// |det(S - I)| fell below the representable floor; the caller should
    /// retry with a perturbed point.
    #[error("degenerate division: |det(S - I)| = {0:e}")]
    DivisionDegenerate(f64),

    /// Newton iteration did not reach the tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// |d det F / dk| vanished relative to det F: a multiple zero or an
    /// accidental pole.
    #[error("degenerate derivative at k = {k}")]
    DerivativeDegenerate { k: num_complex::Complex64 },

    /// Corrector iterations diverged; the caller halves the step.
    #[error("corrector diverged (residual {residual:e} after {iterations} iterations)")]
    CorrectorDiverged { iterations: usize, residual: f64 },

    /// Continuation step length would fall below its lower bound.
    #[error("step underflow: h = {h:e} below h_min = {h_min:e}")]
    StepUnderflow { h: f64, h_min: f64 },

    /// The Jacobian null space at a flagged branch point is not
    /// two-dimensional.
    #[error("null-space rank error: second singular value {sigma2:e} not small vs {sigma1:e}")]
    NullSpaceRank { sigma1: f64, sigma2: f64 },

    /// Configuration file rejected; `field` names the offending key.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors the CLI maps to exit code 1 (configuration),
    /// false for numerical failures (exit code 2).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
