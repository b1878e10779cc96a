//! Minimizers of two-phase energies with exponential gradient growth,
//! `J(u) = ∫ Φ(|∇u|) − f(x,u)·u + γ(x,u) dx` with `Φ(s) = e^{s²} − 1`,
//! computed through the truncated laws `Φ_k` and continued to `k = ∞`.
//!
//! The crate is organised bottom-up:
//!
//! * [`nfunction`]: the energy laws `Φ_k` / `Φ`, their derivatives and fluxes.
//! * [`grid`]: structured simplicial meshes of intervals and rectangles.
//! * [`problem`]: coefficient presets and the JSON problem configuration.
//! * [`energy`]: the discrete smoothed functional and its exact gradient.
//! * [`solver`]: L-BFGS descent with Armijo backtracking and `(k, δ)` continuation.
//! * [`geometry`]: level sets, coarea perimeters, thin bands, box counting.
//! * [`diagnostics`]: measured regularity constants and Euler–Lagrange residuals.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod nfunction;
pub mod output;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Domain, Mesh, ScalarField};
pub use nfunction::{EnergyLaw, Order};
pub use problem::{Coefficient, Config, ProblemSpec, SampledProblem};
pub use solver::{SolveResult, SolverOptions};
