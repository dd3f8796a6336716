//! Numerical laboratory for the semilinear heat equation
//!
//! ```text
//!     u_t - Δ_H u = |u|^p      on  H_n × (0, T)
//! ```
//!
//! where `Δ_H` is the sub-Laplacian of the Heisenberg group `H_n`.
//! The crate provides the group algebra, anisotropic grids and quadrature,
//! finite-difference realizations of `Δ_H`, a heat-kernel workbench, a
//! forward-Euler semilinear solver with lifespan extraction, the mild-solution
//! (Picard/Duhamel) machinery in weighted sup-norm spaces, test-function
//! blow-up certificates, and lifespan sweeps across data amplitudes.
//!
//! Everything is validated at `n = 1` (homogeneous dimension `Q = 4`); the
//! APIs carry `n` as a runtime value throughout.

pub mod certificates;
pub mod convolve;
pub mod error;
pub mod grid;
pub mod heisenberg;
pub mod hfield;
pub mod mild;
pub mod propagator;
pub mod report;
pub mod solver;
pub mod sublaplacian;
pub mod sweep;

pub use error::CoreError;
pub use grid::{GridSpec, ScalarField};
pub use heisenberg::{GroupParams, GroupPoint};
