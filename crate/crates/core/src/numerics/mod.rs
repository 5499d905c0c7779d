//! Backend-agnostic numerical infrastructure: fixed-step RK4 integration,
//! dense eigendecompositions (LAPACK-backed), null-space extraction, and a
//! hand-rolled complex banded LU with targeted (shift-and-invert subspace)
//! eigenvalue refinement for problems too large to diagonalize densely.

pub mod banded;
pub mod eig;
pub mod fit;
pub mod kernel;
pub mod ode;

pub use banded::{banded_null_vector, targeted_eigenpairs, Banded, BandedLu, RitzPair, TargetedOpts};
pub use eig::{eig_general, eigvals_general, hermitian_eig, GeneralEigenSystem};
pub use fit::linear_fit;
pub use kernel::kernel_basis;
pub use ode::{integrate_fixed, integrate_to, rk4_step, OdeSettings, OdeState};

/// Eigenvector condition estimates above this are treated as numerically
/// defective: spectral decompositions are flagged and weight-dependent
/// post-processing refuses to run rather than normalize garbage.
pub const DEFECTIVE_CONDITION_LIMIT: f64 = 1e8;
