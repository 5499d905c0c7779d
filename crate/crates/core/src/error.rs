//! Error type shared by all modules.

/// Everything that can go wrong in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A model or algorithm parameter is out of its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Matrix/vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The LAPACK backend reported a failure.
    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    /// Eigenvector matrix too ill-conditioned to trust a spectral
    /// decomposition; the point is flagged instead of silently normalized.
    #[error(
        "near-defective eigenproblem: eigenvector condition estimate {cond:.3e} \
         exceeds {limit:.3e}; refusing spectral normalization at this point"
    )]
    Defective { cond: f64, limit: f64 },

    /// Trajectory step size too coarse for the requested unraveling.
    #[error(
        "step too large: max jump probability per step {p_max:.4} exceeds {cap}; \
         use dt < {dt_cap:.3e}"
    )]
    StepTooLarge { p_max: f64, cap: f64, dt_cap: f64 },

    /// An internal cross-check failed (these indicate bugs, not bad input).
    #[error("internal consistency: {0}")]
    Inconsistency(String),

    /// Iterative eigenvalue refinement did not reach its residual target.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
