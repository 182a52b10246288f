//! Scenario harness: configuration, runs, sweeps, output files and the CLI
//! entry points.

pub mod check;
pub mod config;
pub mod io;
pub mod run;

pub use config::{InitialData, InitialKind, ScenarioConfig, StepMode};
pub use run::{run_kinetic, run_kinetic_with, run_limit, run_sweep, KineticRun, LimitRun};
