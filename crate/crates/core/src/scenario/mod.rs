//! Scenario files, presets, matrix ingestion, output files and the quick
//! self-check suite behind `pqnn check`.

mod checks;
mod config;
mod ingest;
mod output;
mod presets;

pub use checks::{run_checks, CheckOutcome};
pub use config::{
    load_config, parse_config, save_config, ActivationConfig, BallConfig, BiasConfig,
    CouplingConfig, InitialConfig, KernelConfig, MethodConfig, OutputConfig, PlanConfig,
    ScenarioConfig, DEFAULT_DT, DEFAULT_STRIDE,
};
pub use ingest::{ingest_matrix, parse_complex, synthetic_cat_matrix};
pub use output::{
    emit_outputs, exit_code, heatmap_pgm, run_scenario, RunReport, EXIT_BLOW_UP, EXIT_CONFIG,
    EXIT_IO, EXIT_OK, FAILURE_MARKER, FIELD_FILE, HEATMAP_FILE, NORMS_FILE, PARAMETERS_FILE,
};
pub use presets::{horizons, preset, Horizon, PRESET_NAMES};
