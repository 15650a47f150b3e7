//! Config-driven runner for the `gradflow-core` schemes: benchmark problems,
//! time loops with energy and limiter logs, grid-refinement studies and
//! CSV output.

pub mod catalog;
pub mod config;
pub mod convergence;
pub mod output;
pub mod runner;

pub use config::RunConfig;
pub use convergence::{convergence_study, ConvergenceRow, ConvergenceStudy};
pub use runner::{run, RunArtifacts};
