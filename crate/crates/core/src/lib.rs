//! Convex semidefinite reconstruction of piecewise-constant conductivities on
//! concentric annuli.
//!
//! The crate is `no_std` (with `alloc`) and contains the numerical core:
//!
//! * [`forward`]: analytic Neumann-to-Dirichlet eigenvalues of a layered disk
//!   and their exact gradients,
//! * [`measurement`]: the Galerkin measurement matrix `F_m(σ)` and its Jacobian,
//! * [`linalg`]: dense symmetric eigen-decomposition and Loewner-order tests,
//! * [`calibration`]: offline computation of the cost vector `c` and the
//!   stability constant `λ` on a sample set,
//! * [`solver`]: the convex program `min cᵀσ s.t. F_m(σ) ⪯ Y + τI, σ ∈ [a,b]`,
//! * [`lsq`]: a Levenberg-Marquardt least-squares baseline,
//! * [`properties`]: seeded randomized checks of the monotonicity and
//!   convexity structure.
//!
//! IO, file formats and the command line live in the `eitsdp` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bounds;
pub mod calibration;
mod error;
pub mod forward;
pub mod linalg;
pub mod lsq;
mod math;
pub mod measurement;
pub mod properties;
pub mod solver;

pub use bounds::SigmaBox;
pub use calibration::{CalibrationCertificate, SampleSpec};
pub use error::{Error, Result};
pub use forward::Geometry;
pub use linalg::{EigenDecomposition, SymMatrix};
pub use measurement::{JacobianStack, MeasurementModel};
pub use solver::{Backend, ConvexProblem, SolveReport, SolveStatus};
