//! Experiment runner: scenario registry, TOML configs, cell orchestration
//! and CSV/SVG/JSON output.

mod config;
mod run;
mod scenario;

pub use config::{CutoffSpec, ExperimentConfig, ExperimentSpec, MultiplierSpec};
pub use run::{run, CellFailureRecord, ExperimentReport, OutputFile, ResolutionInfo, VerdictLine};
pub use scenario::{list_scenarios, ScenarioInfo, ScenarioSpec};
