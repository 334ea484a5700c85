//! Finite-element solver for `u_t − Δ_p u = ∫₀ᵗ g(t−s) Δ_p u ds + f` on an interval with
//! homogeneous Dirichlet conditions.
//!
//! Space is discretized with continuous degree-`r` Lagrange elements, time with
//! Crank-Nicolson and trapezoidal memory sums. Each step is solved by fixed-point iteration.

pub mod analysis;
pub mod assembly;
pub mod banded;
pub mod config;
pub mod error;
pub mod experiments;
pub mod memory;
pub mod mesh;
pub mod output;
pub mod problem;
pub mod stepper;
pub mod verify;

pub use error::{Error, Result};
pub use memory::{Kernel, QuadratureMode};
pub use mesh::{build_uniform_mesh, Mesh1D};
pub use problem::ProblemDef;
pub use stepper::{march, RunOutput, Scheme, SchemeChoice, SolverConfig};
