//! Experiment harness for the SIMEX-RK integrator.
//!
//! Everything the `simex` binary does is available as library functions so
//! the acceptance suite can drive the same code paths: time-step
//! convergence studies on the 1D model problems, the stage-alternation
//! counterexample, generalized stability-region scans, the 2D space-time
//! refinement study, and tableau checking.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::RunConfig;
