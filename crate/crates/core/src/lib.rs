//! Numerical laboratory for a coherently driven collective spin of N
//! two-level emitters subject to squeezed collective decay.
//!
//! The model lives on a single spin-J multiplet (J = N/2) and evolves under
//!
//! ```text
//!     d rho/dt = -i Omega [S_x, rho]
//!                + (Gamma/2J) (2 D rho D' - {D'D, rho}),
//!     D = cos(theta) S_- + sin(theta) S_+,
//! ```
//!
//! where `'` denotes the adjoint. Gamma sets the unit of time; theta in
//! [0, pi/2] interpolates between pure collective decay (theta = 0) and pure
//! collective pumping (theta = pi/2), passing through the strong-symmetry
//! point theta = pi/4 where D is proportional to S_x.
//!
//! Modules are organized bottom-up: `numerics` holds backend-agnostic dense
//! and banded linear algebra plus a fixed-step RK4 integrator, `spin_algebra`
//! the collective operators and coherent-state tooling, `liouvillian` the
//! vectorized generator and its spectral analysis, and the remaining modules
//! the physics built on top (mean-field flow, bosonic expansion, quantum
//! trajectories, counting statistics, emission spectra).

pub mod counting_stats;
pub mod emission;
pub mod error;
pub mod holstein_primakoff;
pub mod liouvillian;
pub mod mean_field;
pub mod numerics;
pub mod params;
pub mod spin_algebra;
pub mod trajectories;

pub use error::{Error, Result};
pub use params::ModelParams;

/// Shorthand used throughout: dense complex scalars and matrices.
pub type C64 = num_complex::Complex64;
/// Dense complex square matrix acting on the (N+1)-dimensional multiplet.
pub type Operator = ndarray::Array2<C64>;
