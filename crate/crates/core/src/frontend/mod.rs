//! Input formats and result rendering.
pub mod chc;
pub mod config;
pub mod output;
pub mod problem;
pub use problem::{valid_name, ProblemError, SafetyProblem, StateVar};
