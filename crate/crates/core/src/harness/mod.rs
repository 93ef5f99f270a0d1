//! Experiment orchestration: config files, ensembles, metrics, theory tables
//! and comparisons.

pub mod analysis;
pub mod config;
pub mod ensemble;
pub mod metrics;

pub use analysis::{compare, run_theory, transient_table, CompareReport, SteadyStateLine, TheoryReport};
pub use config::{BaselineSpec, CombinationSpec, ExperimentConfig, HarnessSpec, SupervisorSpec, TopologyKind};
pub use ensemble::{run_baselines, run_ensemble, run_ensemble_over, run_realization, Baseline};
pub use metrics::{estimate_steady_state, MetricsRow, MetricsTable, COLUMNS};
