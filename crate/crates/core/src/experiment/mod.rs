//! Scenario files, the three case-study presets, and the CSV/JSON outputs
//! written for each run.

mod config;
mod output;
mod preset;

pub use config::{
    load_config, AdversaryFile, AliceFile, ConfigFile, FeaturesFile, LinkFile, NoiseFile,
    PolicyFile, ScenarioConfig, StationFile, DEFAULT_ALIGNMENT_FRACTION,
    DEFAULT_PASS_PEAK_OFFSET_S, WINDOW_SEARCH_SPAN_S,
};
pub use output::{
    emit_trajectory, format_float, propagation_csv, run_scenario, write_dep_csv, write_summary_csv,
    RunManifest, RunRequest,
};
pub use preset::{preset_config, preset_file, run_scenario_preset, PresetName};
