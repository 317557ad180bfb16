//! Scenario files, CSV artifacts and the command line for the virtual PHIL
//! testbench. The numerical work lives in `philsim_core`.
//!
//! A run reads one scenario, executes one of four modes and writes its
//! artifacts into an output directory:
//!
//! * `analyze`: `verdict.csv`, `frequency_response.csv`
//! * `simulate`: `trace.csv`, `accuracy.csv`
//! * `sweep`: `stability_map.csv`
//! * `cosim`: `trace_<unit>.csv`, `master_log.txt`, and depending on the
//!   setup `skew.csv`, `trace_loop.csv`, `accuracy.csv`

pub mod artifacts;
pub mod commands;
pub mod quantity;
pub mod scenario;

pub use artifacts::Artifact;
pub use commands::{run, Mode, RunError};
pub use scenario::{Scenario, ScenarioError};
