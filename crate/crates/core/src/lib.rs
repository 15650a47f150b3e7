//! Positivity-preserving, mass-conserving finite-volume schemes for
//! nonlinear Fokker–Planck and aggregation–diffusion equations
//!
//! ```text
//! ∂t ρ = ∇·(ρ ∇(log ρ + V + intensity · W * ρ))
//! ```
//!
//! with zero-flux boundaries, written as `∂t ρ = ∇·(M ∇(ρ / M))` with
//! mobility `M = exp(-V - intensity · W * ρ)`. The implicit steps solve for
//! `G = ρ / M` with the mobility frozen, which gives M-matrix systems and
//! therefore positivity for any time step.

mod dd;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod limiter;
pub mod model;
pub mod solver1d;
pub mod solver2d;
pub mod state;

pub use error::{Error, Result};
pub use grid::{cell_average_init_1d, cell_average_init_2d, Field, Grid1D, Grid2D, Quadrature};
pub use model::{
    MobilityEvaluator1D, MobilityEvaluator2D, MobilityProfile, MobilityProfile2D, ProblemSpec1D, ProblemSpec2D,
    SelfTermPolicy,
};
pub use solver1d::Solver1D;
pub use solver2d::{LinearSolver2D, Solver2D};
pub use state::{Scheme, SolverState, StepOptions, StepOutcome, StepRecord};
