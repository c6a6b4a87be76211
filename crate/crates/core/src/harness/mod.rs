//! Scenario configuration, topology construction, seeded batches and result
//! files.

mod batch;
mod config;
mod output;
mod presets;
mod world;

pub use batch::{run_batch, run_compare, seed_for, BatchResult, RunMetrics, RunPanic};
pub use config::{load_scenario, parse_scenario, ConfigError, LinkSpec, PathSpec, QueueSpec, ScenarioConfig, MAX_PATHS};
pub use output::{emit_outputs, occupancy_table, runs_csv, summary_csv, OutputError};
pub use presets::{all_presets, preset, PRESET_NAMES};
pub use world::{
    bottleneck_capacity, run_simulation, RunOptions, RunResult, SanityReport, ACK_SIZE, SEND_BUFFER_SEGMENTS,
    SIDE_QUEUE_BYTES,
};
